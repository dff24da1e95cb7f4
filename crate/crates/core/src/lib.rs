//! Fairness-aware pain-recovery classification from minute-level wearable data.
//!
//! The crate is organised bottom-up:
//!
//! - [`cohort`]: participants, day records, pain assessments, label derivation,
//!   imputation, normalisation, splitting, CSV ingestion and a seeded synthetic
//!   cohort generator.
//! - [`features`]: statistical, temporal and spectral feature extraction per
//!   channel and day, the four day-over-day deviance transforms, and the
//!   encoding plans that turn a cohort into a model matrix.
//! - [`fairness`]: group fairness metrics (SPD, DI, EOD, AOD, Theil) and
//!   verdicts.
//! - [`net`]: a small 1D convolutional network trained with binary
//!   cross-entropy or the multi-attribute fairness loss.
//! - [`mitigation`]: reweighing, disparate impact repair and reject option
//!   classification.
//! - [`baselines`]: weighted logistic regression, Bernoulli naive Bayes and an
//!   entropy decision tree.
//! - [`harness`]: experiment specs, the model/mitigation grid and result tables.
//!
//! Data-parallel inner loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise. Results are
//! bit-identical in both modes.

pub mod baselines;
pub mod cohort;
pub mod error;
pub mod exec;
pub mod fairness;
pub mod features;
pub mod harness;
pub mod matrix;
pub mod mitigation;
pub mod net;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
