//! Experiment orchestration: data source, encoding, bias detection, the
//! mitigation by model grid and result tables.
//!
//! Seeds: repetition `r` splits participants with `derive_seed(seed, [1, r])`
//! and trains every model with `derive_seed(seed, [2, r])`, so the two
//! networks of one repetition share initialisation, shuffling and dropout
//! and differ only in their loss. Cells run through [`Exec`](crate::exec::Exec)
//! and are single-threaded inside, so results do not depend on scheduling.

mod detect;
mod results;
mod run;
mod spec;

pub use detect::{detect_bias, BiasEntry};
pub use results::{rank, render_ranking, write_outputs, AttributeRanking, RankedRow, ResultRow, ResultTable, Stage, SummaryRow};
pub use run::{run_experiment, run_experiment_with};
pub use spec::{DataSource, ExperimentSpec};
