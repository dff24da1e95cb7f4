//! One-dimensional convolutional classifier trained with plain mini-batch
//! SGD under binary cross-entropy or the multi-attribute fairness loss.
//!
//! Layers: conv(64, width 3) → batch norm → ReLU → max-pool(2) → conv(32,
//! width 3) → batch norm → ReLU → max-pool(2) → flatten → dense(512) → ReLU →
//! dropout → dense(2) → softmax. The input is a single channel.

pub mod arch;
pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod loss;
pub mod model;
pub mod params;
pub mod train;

pub use arch::{Arch, Shapes};
pub use gradcheck::{grad_check, reduced_fixture, GradCheckCase, GradCheckReport};
pub use loss::{bce_loss, mafl_eval, mafl_loss, LossEval, LossKind, LossTerms, PROB_CLIP};
pub use model::{backward, forward, predict, predict_batch, Cache, Mode, Prediction};
pub use params::NetworkParameters;
pub use train::{predict_dataset, train, write_history_csv, EpochRecord, Selection, TrainConfig, TrainOutcome};
