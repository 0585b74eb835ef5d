//! Baseline-free attribution for multichannel time-series classifiers.
//!
//! Integrated gradients computed from an arbitrary (usually zero) baseline are
//! shifted by a per-feature offset measured once with Shapley sampling on a
//! handful of reference records. On classifiers that process every channel
//! independently with shared weights, the compensated attributions satisfy
//! completeness, dummy, linearity, implementation invariance and symmetry.

pub mod attribution;
pub mod compensation;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{Classifier, Model};
pub use tensor::{Record, Tensor};
