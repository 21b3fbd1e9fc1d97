//! Toolkit for class-imbalanced binary tabular classification.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`data`]: CSV ingestion, correlation pruning, stratified folds and splits.
//! 2. [`smote`] and [`tabgan`]: minority oversampling by neighbour interpolation
//!    or by a generative adversarial network (plain or copula-transformed).
//! 3. [`hyperopt`]: define-by-run search with a tree-structured Parzen
//!    estimator and a median pruner.
//! 4. [`learners`]: gradient-boosted trees and extremely randomized trees.
//! 5. [`ensemble`]: weighted soft/hard voting.
//! 6. [`metrics`]: classification metrics and the cross-validation harness.
//! 7. [`pipeline`]: the inspect/balance/tune/train/bench stages used by the CLI.

pub mod data;
pub mod ensemble;
pub mod hyperopt;
pub mod learners;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod smote;
pub mod tabgan;

pub use data::{DataError, FoldAssignment, Table};
pub use ensemble::{EnsembleModel, VotingMode};
pub use learners::{EtcConfig, GbdtConfig, TrainedModel};
pub use metrics::{ConfusionMatrix, MetricsReport};
