//! Weighted classical classifiers: logistic regression, Bernoulli naive
//! Bayes and an entropy decision tree.
//!
//! Every trainer rescales the instance weights to mean 1 first, so
//! multiplying all weights by a constant leaves the learned model bitwise
//! unchanged.

mod bayes;
mod logistic;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bayes::{binarize, train_naive_bayes, NaiveBayes, BINARIZE_AT, NB_ALPHA};
pub use logistic::{logistic_objective, train_logistic, LinearModel, LogisticConfig};
pub use tree::{train_decision_tree, DecisionTree, Node, TreeConfig};

use crate::{Error, Matrix, Result};

/// Model kinds the experiment grid can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Convolutional network with the fairness loss.
    #[serde(rename = "mafl")]
    MaflCnn,
    BceCnn,
    Logistic,
    NaiveBayes,
    DecisionTree,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::MaflCnn,
        ModelKind::BceCnn,
        ModelKind::Logistic,
        ModelKind::NaiveBayes,
        ModelKind::DecisionTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MaflCnn => "mafl",
            ModelKind::BceCnn => "bce_cnn",
            ModelKind::Logistic => "logistic",
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::DecisionTree => "decision_tree",
        }
    }

    pub fn is_network(self) -> bool {
        matches!(self, ModelKind::MaflCnn | ModelKind::BceCnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "mafl" | "mafl_cnn" => Ok(ModelKind::MaflCnn),
            "bce" | "bce_cnn" => Ok(ModelKind::BceCnn),
            "logistic" | "lr" => Ok(ModelKind::Logistic),
            "naive_bayes" | "nb" => Ok(ModelKind::NaiveBayes),
            "decision_tree" | "tree" | "dt" => Ok(ModelKind::DecisionTree),
            _ => Err(Error::invalid(format!("unknown model `{s}`"))),
        }
    }
}

/// A trained classical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Logistic(LinearModel),
    NaiveBayes(NaiveBayes),
    DecisionTree(DecisionTree),
}

impl Baseline {
    /// Favorable-class probability per row.
    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        match self {
            Baseline::Logistic(l) => l.predict_proba(m),
            Baseline::NaiveBayes(b) => b.predict_proba(m),
            Baseline::DecisionTree(t) => t.predict_proba(m),
        }
    }

    pub fn predict(&self, m: &Matrix) -> Result<Vec<u8>> {
        match self {
            Baseline::Logistic(l) => l.predict(m),
            Baseline::NaiveBayes(b) => b.predict(m),
            Baseline::DecisionTree(t) => t.predict(m),
        }
    }
}

/// Checks shapes and rescales weights (1 when absent) to mean 1.
pub(crate) fn normalized_weights(m: &Matrix, labels: &[u8], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = m.rows();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let shape = |what: &str, got: usize| Error::Shape {
        expected: format!("{n} {what}"),
        actual: got.to_string(),
    };
    if labels.len() != n {
        return Err(shape("labels", labels.len()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be binary"));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite values"));
    }
    match weights {
        None => Ok(vec![1.0; n]),
        Some(w) => {
            if w.len() != n {
                return Err(shape("weights", w.len()));
            }
            if let Some(i) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(format!("weight[{i}] = {} must be positive", w[i])));
            }
            let mean = w.iter().sum::<f64>() / n as f64;
            Ok(w.iter().map(|x| x / mean).collect())
        }
    }
}

pub(crate) fn check_cols(expected: usize, m: &Matrix) -> Result<()> {
    if m.cols() == expected {
        Ok(())
    } else {
        Err(Error::Shape {
            expected: format!("{expected} columns"),
            actual: m.cols().to_string(),
        })
    }
}
