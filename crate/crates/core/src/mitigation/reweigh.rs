use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::{Error, Result};

/// Weight per `(group, label)` cell, indexed `[group][label]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweighingTable {
    pub weights: [[f64; 2]; 2],
    pub counts: [[usize; 2]; 2],
    /// Empty cells; they carry weight 1 and void the zero-SPD guarantee.
    pub warnings: Vec<String>,
}

impl ReweighingTable {
    pub fn weight(&self, group: u8, label: u8) -> f64 {
        self.weights[group as usize][label as usize]
    }

    pub fn instance_weights(&self, labels: &[u8], group: &[u8]) -> Vec<f64> {
        labels.iter().zip(group).map(|(&l, &g)| self.weight(g, l)).collect()
    }
}

/// `w(g, l) = P(g) P(l) / P(g, l)` with per-instance weights.
pub fn reweigh(labels: &[u8], group: &[u8]) -> Result<(ReweighingTable, Vec<f64>)> {
    check_lengths(labels.len(), group.len(), "group entries")?;
    let mut counts = [[0usize; 2]; 2];
    for (&l, &g) in labels.iter().zip(group) {
        if l > 1 || g > 1 {
            return Err(Error::invalid("labels and groups must be binary"));
        }
        counts[g as usize][l as usize] += 1;
    }
    let n = labels.len() as f64;
    let ng = [0, 1].map(|g| (counts[g][0] + counts[g][1]) as f64);
    let nl = [0, 1].map(|l| (counts[0][l] + counts[1][l]) as f64);
    for (g, name) in [(0, "unprivileged"), (1, "privileged")] {
        if ng[g] == 0.0 {
            return Err(Error::DegenerateGroup(format!("{name} group absent")));
        }
    }
    let mut weights = [[1.0; 2]; 2];
    let mut warnings = Vec::new();
    for g in 0..2 {
        for l in 0..2 {
            if counts[g][l] == 0 {
                let msg = format!("empty cell (group {g}, label {l}): weight 1");
                log::warn!("{msg}");
                warnings.push(msg);
            } else {
                // (ng/n)(nl/n)/(c/n) = ng nl / (n c)
                weights[g][l] = ng[g] * nl[l] / (n * counts[g][l] as f64);
            }
        }
    }
    let table = ReweighingTable { weights, counts, warnings };
    let w = table.instance_weights(labels, group);
    Ok((table, w))
}
