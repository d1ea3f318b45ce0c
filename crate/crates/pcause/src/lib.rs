//! Tight interval bounds on probabilities of causation (PN, PS, PNS, w-PN,
//! w-PS) for quasi-Markovian structural causal models given an observational
//! joint distribution over binary endogenous variables, plus a causal-path
//! ranking algorithm that applies those bounds to root cause analysis.
//!
//! The pipeline, end to end:
//! 1. [`graph`] — causal graph, validation, confounded components;
//! 2. [`canonical`] — enumeration of deterministic mechanism tuples per
//!    component (the latent state spaces);
//! 3. [`cfgraph`] — multi-world counterfactual graphs and their reduction;
//! 4. [`program`] — linear constraint polytopes plus a multilinear
//!    objective polynomial;
//! 5. [`solve`] — exact global optimization by vertex enumeration over a
//!    product of polytopes;
//! 6. [`metrics`] — the five causation metrics behind a common interface;
//! 7. [`rca`] — scoring of upstream nodes and pruned-DFS path ranking;
//! 8. [`bench`] — synthetic models, narratives and the experiment harness.

pub mod bench;
pub mod canonical;
pub mod cfgraph;
pub mod dsep;
pub mod error;
pub mod formats;
pub mod graph;
pub mod metrics;
pub mod program;
pub mod rca;
pub mod records;
pub mod solve;
pub mod table;

pub use error::{Error, Result};
pub use graph::{CausalGraph, NodeKind, VariableId};
pub use table::{Dataset, JointTable};
