use serde::{Deserialize, Serialize};

use crate::cohort::{Attribute, Cohort};
use crate::fairness::{dataset_bias, value_serde, Metric, Verdict};
use crate::mitigation::reweigh;
use crate::Result;

/// Label bias of one attribute over a cohort's label events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub attribute: Attribute,
    pub instances: usize,
    pub privileged: usize,
    pub unprivileged: usize,
    #[serde(with = "value_serde")]
    pub spd: Option<f64>,
    #[serde(with = "value_serde")]
    pub di: Option<f64>,
    pub spd_verdict: Verdict,
    pub di_verdict: Verdict,
    /// Either metric outside its fair range.
    pub biased: bool,
    /// SPD of the labels under reweighing weights.
    #[serde(with = "value_serde")]
    pub reweighed_spd: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn entry(attribute: Attribute, labels: &[u8], group: &[u8]) -> BiasEntry {
    let privileged = group.iter().filter(|&&g| g == 1).count();
    let mut warnings = Vec::new();
    let (spd, di) = match dataset_bias(labels, group, None) {
        Ok((s, d)) => (Some(s), Some(d)),
        Err(e) => {
            warnings.push(e.to_string());
            (None, None)
        }
    };
    let reweighed_spd = match reweigh(labels, group) {
        Ok((t, w)) => {
            warnings.extend(t.warnings);
            dataset_bias(labels, group, Some(&w)).ok().map(|(s, _)| s)
        }
        Err(e) => {
            warnings.push(format!("reweighing: {e}"));
            None
        }
    };
    let v = |m: Metric, x: Option<f64>| x.map_or(Verdict::Undefined, |x| m.verdict(x));
    let (spd_verdict, di_verdict) = (v(Metric::Spd, spd), v(Metric::Di, di));
    BiasEntry {
        attribute,
        instances: labels.len(),
        privileged,
        unprivileged: labels.len() - privileged,
        spd,
        di,
        spd_verdict,
        di_verdict,
        biased: [spd_verdict, di_verdict].iter().any(|v| !v.is_fair() && *v != Verdict::Undefined),
        reweighed_spd,
        warnings,
    }
}

/// Dataset bias of each attribute over the ground-truth labels.
pub fn detect_bias(cohort: &Cohort, attributes: &[Attribute]) -> Result<Vec<BiasEntry>> {
    Ok(attributes
        .iter()
        .map(|&a| {
            let (labels, group) = cohort.labels_and_groups(a);
            entry(a, &labels, &group)
        })
        .collect())
}

pub(crate) fn bias_of(attribute: Attribute, labels: &[u8], group: &[u8]) -> BiasEntry {
    entry(attribute, labels, group)
}
