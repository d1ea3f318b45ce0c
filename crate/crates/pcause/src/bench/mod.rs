//! Synthetic benchmark suite: bundled graphs, fully specified models with
//! ground-truth counterfactuals, narrative fixtures and the experiment
//! harness.

pub mod experiment;
pub mod generator;
pub mod models;
pub mod narratives;
pub mod scm;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use narratives::{narrative, Narrative, NARRATIVES};
pub use scm::{FullScm, Mechanism, Prior};
pub use models::{example3_distribution, example3_graph, model, smoking_graph, ModelId};
