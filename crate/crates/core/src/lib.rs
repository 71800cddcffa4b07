//! Analytic class-incremental learning over frozen feature vectors.
//!
//! The engine keeps only closed-form sufficient statistics (class means, a
//! shared covariance, Gram matrices and per-class random-feature sums) and
//! re-solves every learned layer in closed form after each task. Nothing is
//! trained by gradient descent, so nothing learned earlier is overwritten.
//!
//! Data flows through the layers in this order:
//!
//! ```text
//! features ─► random projection (GELU) ─► contrastive projection ─► NCM / ELM
//!     │                                         ▲
//!     └─► class means + shared Σ ─► repulsion ──┘ (target prototypes)
//! ```

pub mod analytic;
pub mod checkpoint;
pub mod classifier;
pub mod cp_layer;
pub mod error;
pub mod feature_store;
pub mod pipeline;
pub mod report;
pub mod repulsion;
pub mod stats;

pub(crate) mod linalg;

pub use error::{Error, Result};
pub use feature_store::{FeatureDataset, SynthSpec, TaskStream};
pub use pipeline::{Learner, LearnerConfig, Method, PredictMode, RunReport};
