//! Disparate impact repair by quantile alignment.
//!
//! For one column, let `Q_g` be the empirical quantile function of group `g`
//! (linear interpolation of its sorted values at position `q (n_g - 1)`). A
//! value of group `g` whose tie-averaged rank position is `q` has target
//! `T(q) = median_g' Q_g'(q)` and is repaired to `(1 - λ) x + λ T(q)`. Each
//! `Q_g` is non-decreasing, so `T` is too and within-group order survives.
//! Groups with fewer than two values pass through unchanged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::exec::Exec;
use crate::{Error, Matrix, Result};

/// Full-repair map of one group within one column: each distinct original
/// value and its target. Empty for a pass-through group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMap {
    pub group: u8,
    pub values: Vec<f64>,
    pub targets: Vec<f64>,
}

impl GroupMap {
    fn target(&self, x: f64) -> Option<f64> {
        let (v, t) = (&self.values, &self.targets);
        if v.is_empty() {
            return None;
        }
        let i = v.partition_point(|&a| a < x);
        Some(if i < v.len() && v[i] == x {
            t[i]
        } else if i == 0 {
            t[0]
        } else if i == v.len() {
            t[v.len() - 1]
        } else {
            let f = (x - v[i - 1]) / (v[i] - v[i - 1]);
            t[i - 1] + f * (t[i] - t[i - 1])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub repair_level: f64,
    /// Per column, one map per group seen at fit time.
    pub columns: Vec<Vec<GroupMap>>,
    pub warnings: Vec<String>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn fit_column(values: &[f64], group: &[u8]) -> (Vec<GroupMap>, Vec<u8>) {
    let mut by_group: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (&v, &g) in values.iter().zip(group) {
        by_group.entry(g).or_default().push(v);
    }
    for v in by_group.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let eligible: Vec<&Vec<f64>> = by_group.values().filter(|v| v.len() >= 2).collect();
    let mut passthrough = Vec::new();
    let maps = by_group
        .iter()
        .map(|(&g, sorted)| {
            if sorted.len() < 2 {
                passthrough.push(g);
                return GroupMap { group: g, values: Vec::new(), targets: Vec::new() };
            }
            let last = (sorted.len() - 1) as f64;
            let (mut vals, mut targets) = (Vec::new(), Vec::new());
            let mut i = 0;
            while i < sorted.len() {
                let mut j = i;
                while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                    j += 1;
                }
                let q = (i + j) as f64 / 2.0 / last;
                let mut qs: Vec<f64> = eligible.iter().map(|s| quantile(s, q)).collect();
                vals.push(sorted[i]);
                targets.push(median(&mut qs));
                i = j + 1;
            }
            GroupMap { group: g, values: vals, targets }
        })
        .collect();
    (maps, passthrough)
}

impl RepairPlan {
    pub fn fit(m: &Matrix, group: &[u8], repair_level: f64) -> Result<Self> {
        Self::fit_with(m, group, repair_level, Exec::default())
    }

    pub fn fit_with(m: &Matrix, group: &[u8], repair_level: f64, exec: Exec) -> Result<Self> {
        if !(0.0..=1.0).contains(&repair_level) {
            return Err(Error::invalid(format!("repair level {repair_level} outside [0, 1]")));
        }
        check_lengths(m.rows(), group.len(), "group entries")?;
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("repair of a matrix with non-finite values"));
        }
        let fitted = exec.map(m.cols(), |c| fit_column(&m.column(c), group));
        let mut warnings = Vec::new();
        let mut columns = Vec::with_capacity(fitted.len());
        for (c, (maps, pass)) in fitted.into_iter().enumerate() {
            for g in pass {
                warnings.push(format!("column {c}: group {g} has a single value and passes through"));
            }
            columns.push(maps);
        }
        if !warnings.is_empty() {
            log::warn!("disparate impact repair: {} pass-through column groups", warnings.len());
        }
        Ok(RepairPlan { repair_level, columns, warnings })
    }

    /// Repairs any matrix with the fitted column count. Values between
    /// fitted ones interpolate linearly; values outside clamp to the end
    /// targets. Groups unseen at fit time pass through.
    pub fn transform(&self, m: &Matrix, group: &[u8]) -> Result<Matrix> {
        check_lengths(m.rows(), group.len(), "group entries")?;
        check_lengths(self.columns.len(), m.cols(), "columns")?;
        let lvl = self.repair_level;
        let mut out = m.clone();
        for (c, maps) in self.columns.iter().enumerate() {
            for (r, &g) in group.iter().enumerate() {
                let x = m.get(r, c);
                let t = maps.iter().find(|gm| gm.group == g).and_then(|gm| gm.target(x));
                if let Some(t) = t {
                    out.set(r, c, (1.0 - lvl) * x + lvl * t);
                }
            }
        }
        Ok(out)
    }
}

/// Fits a plan on `m` and repairs it.
pub fn dir_repair(m: &Matrix, group: &[u8], repair_level: f64) -> Result<(Matrix, RepairPlan)> {
    dir_repair_with(m, group, repair_level, Exec::default())
}

pub fn dir_repair_with(m: &Matrix, group: &[u8], repair_level: f64, exec: Exec) -> Result<(Matrix, RepairPlan)> {
    let plan = RepairPlan::fit_with(m, group, repair_level, exec)?;
    let out = plan.transform(m, group)?;
    Ok((out, plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn full_repair_hand_example() {
        let (out, _) = dir_repair(&col(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), &[0, 0, 0, 1, 1, 1], 1.0).unwrap();
        assert_eq!(out.column(0), vec![2.5, 3.5, 4.5, 2.5, 3.5, 4.5]);
    }

    #[test]
    fn zero_level_is_identity() {
        let m = col(&[0.3, -2.0, 7.5, 1.0, 1.0]);
        let (out, _) = dir_repair(&m, &[0, 1, 0, 1, 1], 0.0).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn single_value_group_passes_through() {
        let (out, plan) = dir_repair(&col(&[9.0, 1.0, 2.0, 3.0]), &[0, 1, 1, 1], 1.0).unwrap();
        assert_eq!(out.get(0, 0), 9.0);
        assert_eq!(plan.warnings.len(), 1);
        // The remaining group's own quantiles are the median distribution.
        assert_eq!(&out.column(0)[1..], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ties_share_a_target() {
        let (out, _) = dir_repair(&col(&[1.0, 1.0, 5.0, 0.0, 10.0, 20.0]), &[0, 0, 0, 1, 1, 1], 1.0).unwrap();
        let c = out.column(0);
        assert_eq!(c[0], c[1]);
        assert!(c[2] >= c[0]);
    }

    #[test]
    fn unseen_values_interpolate() {
        let m = col(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let g = [0, 0, 0, 1, 1, 1];
        let plan = RepairPlan::fit(&m, &g, 1.0).unwrap();
        let out = plan.transform(&col(&[1.5, 0.0, 100.0]), &[0, 0, 1]).unwrap();
        assert_eq!(out.column(0), vec![3.0, 2.5, 4.5]);
    }
}
