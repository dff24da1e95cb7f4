//! Group fairness metrics, verdicts and dataset-level bias detection.
//!
//! Group value 1 marks the privileged group. All rates are weighted by the
//! instance weights (1 when absent):
//!
//! | metric | definition | fair range |
//! |--------|------------|------------|
//! | SPD | `P(ŷ=1 | unprv) - P(ŷ=1 | prv)` | `[-0.1, 0.1]` |
//! | DI | `P(ŷ=1 | unprv) / P(ŷ=1 | prv)` | `[0.8, 1.25]` |
//! | EOD | `TPR_unprv - TPR_prv` | `[-0.1, 0.1]` |
//! | AOD | `((FPR_u - FPR_p) + (TPR_u - TPR_p)) / 2` | `[-0.1, 0.1]` |
//! | Theil | `mean((b / μ) ln(b / μ))`, `b = ŷ - y + 1` | `<= 0.1` |
//!
//! A zero privileged favorable rate gives DI = +inf when the unprivileged
//! rate is positive and DI = 1 when both are zero.

mod report;

pub(crate) use report::value_serde;
pub use report::{report, FairnessReport, Metric, MetricVerdicts, Verdict, FAIR_SLACK};

use crate::{Error, Result};

/// Borrowed view of predictions, optional labels, group indicators and
/// optional weights.
#[derive(Debug, Clone, Copy)]
pub struct GroupedOutcomes<'a> {
    pub predictions: &'a [u8],
    pub labels: Option<&'a [u8]>,
    pub group: &'a [u8],
    pub weights: Option<&'a [f64]>,
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().position(|&x| x > 1) {
        Some(i) => Err(Error::invalid(format!("{name}[{i}] = {} is not binary", v[i]))),
        None => Ok(()),
    }
}

impl<'a> GroupedOutcomes<'a> {
    pub fn new(
        predictions: &'a [u8],
        labels: Option<&'a [u8]>,
        group: &'a [u8],
        weights: Option<&'a [f64]>,
    ) -> Result<Self> {
        let n = predictions.len();
        let same = |len: usize, name: &str| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Shape {
                    expected: format!("{n} {name}"),
                    actual: len.to_string(),
                })
            }
        };
        same(group.len(), "group entries")?;
        check_binary("predictions", predictions)?;
        check_binary("group", group)?;
        if let Some(l) = labels {
            same(l.len(), "labels")?;
            check_binary("labels", l)?;
        }
        if let Some(w) = weights {
            same(w.len(), "weights")?;
            if let Some(i) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(format!("weight[{i}] = {} must be positive", w[i])));
            }
        }
        Ok(GroupedOutcomes {
            predictions,
            labels,
            group,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn require_labels(&self) -> Result<&'a [u8]> {
        self.labels.ok_or_else(|| Error::invalid("metric needs ground-truth labels"))
    }

    fn require_both_groups(&self) -> Result<()> {
        let prv = self.group.iter().filter(|&&g| g == 1).count();
        if prv == 0 || prv == self.len() {
            let side = if prv == 0 { "privileged" } else { "unprivileged" };
            return Err(Error::DegenerateGroup(format!("no {side} instances")));
        }
        Ok(())
    }

    /// Weighted favorable-prediction rate of group `g` among instances whose
    /// label equals `label` (all instances when `None`).
    fn rate(&self, g: u8, label: Option<u8>) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.len() {
            if self.group[i] != g {
                continue;
            }
            if let (Some(l), Some(ls)) = (label, self.labels) {
                if ls[i] != l {
                    continue;
                }
            }
            let w = self.weight(i);
            den += w;
            if self.predictions[i] == 1 {
                num += w;
            }
        }
        (den > 0.0).then(|| num / den)
    }

    /// `(unprivileged, privileged)` favorable rates.
    fn favorable_rates(&self) -> Result<(f64, f64)> {
        self.require_both_groups()?;
        Ok((self.rate(0, None).unwrap(), self.rate(1, None).unwrap()))
    }

    fn conditional_rates(&self, label: u8, name: &str) -> Result<(f64, f64)> {
        self.require_labels()?;
        self.require_both_groups()?;
        let cell = |g: u8, side: &str| {
            self.rate(g, Some(label))
                .ok_or_else(|| Error::UndefinedRate(format!("undefined {name}: no {side} instances with label {label}")))
        };
        Ok((cell(0, "unprivileged")?, cell(1, "privileged")?))
    }
}

/// Statistical parity difference.
pub fn spd(g: &GroupedOutcomes) -> Result<f64> {
    let (u, p) = g.favorable_rates()?;
    Ok(u - p)
}

pub fn disparate_impact(g: &GroupedOutcomes) -> Result<f64> {
    let (u, p) = g.favorable_rates()?;
    Ok(di_ratio(u, p))
}

pub(crate) fn di_ratio(u: f64, p: f64) -> f64 {
    if p > 0.0 {
        u / p
    } else if u > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Equal opportunity difference.
pub fn eod(g: &GroupedOutcomes) -> Result<f64> {
    let (u, p) = g.conditional_rates(1, "TPR")?;
    Ok(u - p)
}

/// Average odds difference.
pub fn aod(g: &GroupedOutcomes) -> Result<f64> {
    let (tu, tp) = g.conditional_rates(1, "TPR")?;
    let (fu, fp) = g.conditional_rates(0, "FPR")?;
    Ok(((fu - fp) + (tu - tp)) / 2.0)
}

/// Theil index of the benefits `ŷ - y + 1`.
pub fn theil(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::invalid("theil index of an empty sample"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", predictions.len()),
            actual: labels.len().to_string(),
        });
    }
    check_binary("predictions", predictions)?;
    check_binary("labels", labels)?;
    let b: Vec<f64> = predictions
        .iter()
        .zip(labels)
        .map(|(&p, &l)| f64::from(p) - f64::from(l) + 1.0)
        .collect();
    let n = b.len() as f64;
    let mu = b.iter().sum::<f64>() / n;
    if mu <= 0.0 {
        return Err(Error::UndefinedRate("theil index: mean benefit is zero".into()));
    }
    Ok(b.iter()
        .map(|&bi| {
            let r = bi / mu;
            if r > 0.0 {
                r * r.ln()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n)
}

/// SPD and DI of the ground-truth labels.
pub fn dataset_bias(labels: &[u8], group: &[u8], weights: Option<&[f64]>) -> Result<(f64, f64)> {
    let g = GroupedOutcomes::new(labels, None, group, weights)?;
    Ok((spd(&g)?, disparate_impact(&g)?))
}
