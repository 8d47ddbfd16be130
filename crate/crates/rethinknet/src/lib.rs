//! Cost-sensitive multi-label classification built around a recurrent model
//! that revises its full label prediction over a fixed number of rethink
//! iterations.
//!
//! The crate is organized in five layers:
//!
//! - [`costs`]: the four evaluation criteria (Hamming, F1, Accuracy, Rank
//!   loss) and the per-label cost-difference weighting derived from them.
//! - [`data`]: dataset loading (an ARFF subset and a native sparse text
//!   format), min-max feature scaling, random splits and summary statistics.
//! - [`kernels`]: dense f64 tensor plumbing, four recurrent cell variants
//!   with hand-written backward passes, the weighted binary cross-entropy,
//!   recurrent weight dropout, the Nadam optimizer and a finite-difference
//!   gradient checker.
//! - [`model`]: the rethinking network itself (shared input, unrolled
//!   recurrent layer, shared dense output head), training with early
//!   stopping, prediction, L2 model selection and memory-matrix extraction.
//! - [`harness`]: experiment orchestration — repeated splits, reweighting
//!   ablations, cell comparisons, a feed-forward baseline, paired t-tests and
//!   report emission.

pub mod costs;
pub mod data;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod model;

pub use costs::{CostFunction, CostKind, Direction, LabelVector, WeightNorm};
pub use data::{Dataset, DatasetStats, LabelSpec, ScalingParams, Split};
pub use error::{Error, Result};
pub use kernels::{CellKind, Tensor};
pub use model::{ModelConfig, RethinkNetModel, TrainConfig};
