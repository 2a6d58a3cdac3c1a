//! Experiment configuration, acceptance criteria and report artifacts.

pub mod artifacts;
pub mod config;
pub mod criteria;
pub mod pipeline;
pub mod svg;

pub use artifacts::{content_hash, ArtifactWriter, Failure, Manifest, ManifestEntry};
pub use config::ExperimentConfig;
pub use criteria::{run_criterion, Check, CriterionReport};
