//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors raised by graph validation, distribution handling, program
/// construction and optimization.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The directed graph contains a cycle; the nodes on one offending
    /// cycle are reported in order.
    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),

    /// An endogenous node has more than one exogenous parent, which breaks
    /// the quasi-Markovian assumption.
    #[error("endogenous node `{0}` has multiple exogenous parents")]
    MultipleExogenousParents(String),

    /// An exogenous node has an incoming edge; exogenous nodes must be roots.
    #[error("exogenous node `{0}` has a parent")]
    ExogenousHasParent(String),

    /// A node name appears twice in a graph declaration.
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    /// An edge references a node that was never declared.
    #[error("edge endpoint `{0}` is not a declared node")]
    UnknownNode(String),

    /// Self loops are rejected outright.
    #[error("self loop on `{0}`")]
    SelfLoop(String),

    /// A dataset with zero rows cannot be turned into a distribution.
    #[error("dataset is empty")]
    EmptyDataset,

    /// A conditional probability was requested given an event of mass zero.
    #[error("conditioning event has probability zero: {0}")]
    ZeroConditioningEvent(String),

    /// Joint table construction failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The requested effect variable is not a descendant of the cause, so
    /// every probability of causation degenerates.
    #[error("effect `{effect}` is not a descendant of cause `{cause}`")]
    TargetNotDescendant { cause: String, effect: String },

    /// A referenced variable does not exist or has the wrong kind.
    #[error("unknown or non-endogenous variable `{0}`")]
    BadVariable(String),

    /// A canonical-state index is outside the space it was used with.
    #[error("canonical state {state} out of range (cardinality {cardinality})")]
    IndexOutOfRange { state: u64, cardinality: u64 },

    /// A mechanism was evaluated without a value for one of its parents.
    #[error("missing value for parent `{0}` while applying a mechanism")]
    MissingParentValue(String),

    /// A constraint polytope admits no feasible point: the input
    /// distribution is incompatible with the model.
    #[error("constraint polytope for `{0}` is infeasible")]
    InfeasiblePolytope(String),

    /// The optimization would exceed the configured evaluation budget.
    #[error("optimization needs ~{needed} evaluations, budget is {budget}")]
    DegreeTooHigh { needed: u64, budget: u64 },

    /// The sampling oracle was invoked with zero samples.
    #[error("sample oracle needs at least one sample")]
    NoSamples,

    /// A structured text input failed to parse.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A benchmark model definition is inconsistent.
    #[error("invalid model specification: {0}")]
    BadModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
