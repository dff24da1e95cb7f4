//! Mini-batch SGD with per-epoch model selection on a held-out fold.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::arch::Arch;
use super::loss::{bce_eval_full, mafl_eval, LossKind, LossTerms};
use super::model::{backward, forward, predict_batch, update_running_stats, Mode, Prediction};
use super::params::NetworkParameters;
use crate::cohort::{split_ids, Attribute};
use crate::exec::Exec;
use crate::fairness::{report, GroupedOutcomes};
use crate::features::Dataset;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// How the returned parameters are chosen among the epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Most fair metrics on the validation fold, then highest validation
    /// accuracy, then earliest epoch. Epochs predicting a single class on
    /// the fold rank below all others.
    FairThenAccuracy,
    /// Parameters after the final epoch.
    #[default]
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lambda: f64,
    pub reg_coef: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    /// Attributes entering the fairness term and the selection count.
    pub attributes: Vec<Attribute>,
    /// Share of training participants held out for model selection.
    pub validation_fraction: f64,
    pub selection: Selection,
    /// Hidden width override; `None` keeps the standard 512.
    pub hidden: Option<usize>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Mafl,
            lambda: 1.0,
            reg_coef: 0.01,
            epochs: 20,
            learning_rate: 0.01,
            batch_size: 32,
            dropout_rate: 0.5,
            seed: 0,
            attributes: Attribute::ALL.to_vec(),
            validation_fraction: 0.2,
            selection: Selection::Last,
            hidden: None,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be non-negative", self.lambda));
        }
        if !(self.reg_coef >= 0.0 && self.reg_coef.is_finite()) {
            return bad(format!("reg_coef {} must be non-negative", self.reg_coef));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!("validation fraction {} outside [0, 1)", self.validation_fraction));
        }
        Ok(())
    }

    pub fn arch(&self, input_len: usize) -> Arch {
        let mut a = Arch::standard(input_len);
        if let Some(h) = self.hidden {
            a.hidden = h;
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub bce: f64,
    pub disparity: f64,
    pub dispersion: f64,
    /// Accuracy of the training-mode batch predictions.
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// SPD on the validation fold for the first configured attribute
    /// (NaN when undefined).
    pub val_spd: f64,
    pub val_fair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: NetworkParameters,
    pub history: Vec<EpochRecord>,
    pub selected_epoch: usize,
}

pub fn write_history_csv<W: Write>(history: &[EpochRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let e = |e: csv::Error| Error::invalid(format!("writing history: {e}"));
    for r in history {
        wr.serialize(r).map_err(e)?;
    }
    wr.flush().map_err(|err| Error::invalid(format!("writing history: {err}")))?;
    Ok(())
}

fn masks(ds: &Dataset, rows: &[usize], attrs: &[Attribute]) -> Vec<Vec<u8>> {
    attrs
        .iter()
        .map(|&a| rows.iter().map(|&i| ds.groups[i].bit(a)).collect())
        .collect()
}

/// Row indices of the training and validation participants.
fn validation_split(ds: &Dataset, cfg: &TrainConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let all: Vec<usize> = (0..ds.len()).collect();
    let ids: Vec<String> = ds.participant_ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if cfg.validation_fraction == 0.0 || ids.len() < 2 {
        return Ok((all.clone(), all));
    }
    let (_, val) = match split_ids(&ids, 1.0 - cfg.validation_fraction, derive_seed(cfg.seed, &[3])) {
        Ok(s) => s,
        Err(_) => return Ok((all.clone(), all)),
    };
    let val: BTreeSet<String> = val.into_iter().collect();
    let (v, t): (Vec<usize>, Vec<usize>) = all.into_iter().partition(|&i| val.contains(&ds.participant_ids[i]));
    Ok((t, v))
}

/// Validation metrics of `params`: (constant predictions?, fair count,
/// accuracy, spd of the first attribute).
fn evaluate(params: &NetworkParameters, ds: &Dataset, rows: &[usize], cfg: &TrainConfig) -> Result<(bool, usize, f64, f64)> {
    let sub = ds.select(rows);
    let preds: Vec<u8> = predict_batch(params, sub.x.as_slice(), cfg.exec)?.iter().map(|p| p.class).collect();
    let constant = preds.iter().all(|&p| p == preds[0]);
    let acc = preds.iter().zip(&sub.labels).filter(|(a, b)| a == b).count() as f64 / preds.len() as f64;
    let mut fair = 0;
    let mut spd = f64::NAN;
    for (k, &a) in cfg.attributes.iter().enumerate() {
        let g = sub.group_column(a);
        let r = report(&GroupedOutcomes::new(&preds, Some(&sub.labels), &g, None)?)?;
        fair += r.fair_count;
        if k == 0 {
            spd = r.spd.unwrap_or(f64::NAN);
        }
    }
    Ok((constant, fair, acc, spd))
}

/// Trains a network from `NetworkParameters::init` on `ds`.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let arch = cfg.arch(ds.x.cols());
    let mut params = NetworkParameters::init(arch, derive_seed(cfg.seed, &[0]))?;
    let (train_rows, val_rows) = validation_split(ds, cfg)?;
    let cols = ds.x.cols();
    let keep = 1.0 - cfg.dropout_rate;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<((bool, usize, f64), usize, NetworkParameters)> = None;
    for epoch in 0..cfg.epochs {
        let mut order = train_rows.clone();
        order.shuffle(&mut seeded(derive_seed(cfg.seed, &[1, epoch as u64])));
        let mut drop_rng = seeded(derive_seed(cfg.seed, &[2, epoch as u64]));
        let mut sums = LossTerms::default();
        let mut correct = 0usize;
        let mut batches = 0usize;
        for (bi, rows) in order.chunks(cfg.batch_size).enumerate() {
            let b = rows.len();
            let mut x = Vec::with_capacity(b * cols);
            for &r in rows {
                x.extend_from_slice(ds.x.row(r));
            }
            let y: Vec<u8> = rows.iter().map(|&r| ds.labels[r]).collect();
            let w: Vec<f64> = rows.iter().map(|&r| ds.weights[r]).collect();
            let mask: Option<Vec<f64>> = (cfg.dropout_rate > 0.0).then(|| {
                (0..b * arch.hidden)
                    .map(|_| if drop_rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect()
            });
            let cache = forward(&params, &x, b, Mode::Train { dropout: mask.as_deref() }, cfg.exec)?;
            let p = cache.favorable();
            let eval = match cfg.loss {
                LossKind::Bce => bce_eval_full(&y, &p, Some(&w))?,
                LossKind::Mafl => mafl_eval(&y, &p, Some(&w), &masks(ds, rows, &cfg.attributes), cfg.lambda, cfg.reg_coef)?,
            };
            if !eval.terms.total.is_finite() || eval.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    detail: format!("{:?}", eval.terms),
                });
            }
            let grads = backward(&params, &cache, &eval.grad, cfg.exec)?;
            params.sgd_step(&grads, cfg.learning_rate);
            update_running_stats(&mut params, &cache);

            correct += cache
                .predictions()
                .iter()
                .zip(&y)
                .filter(|(p, &l)| p.class == l)
                .count();
            sums.bce += eval.terms.bce;
            sums.disparity += eval.terms.disparity;
            sums.dispersion += eval.terms.dispersion;
            sums.total += eval.terms.total;
            batches += 1;
        }
        let nb = batches as f64;
        let (constant, fair, acc, spd) = evaluate(&params, ds, &val_rows, cfg)?;
        history.push(EpochRecord {
            epoch,
            loss: sums.total / nb,
            bce: sums.bce / nb,
            disparity: sums.disparity / nb,
            dispersion: sums.dispersion / nb,
            train_accuracy: correct as f64 / train_rows.len() as f64,
            val_accuracy: acc,
            val_spd: spd,
            val_fair_count: fair,
        });
        log::debug!("epoch {epoch}: {:?}", history.last());
        let key = (!constant, fair, acc);
        let better = match (&best, cfg.selection) {
            (None, _) | (_, Selection::Last) => true,
            (Some((k, _, _)), Selection::FairThenAccuracy) => {
                (key.0, key.1) > (k.0, k.1) || ((key.0, key.1) == (k.0, k.1) && key.2 > k.2)
            }
        };
        if better {
            best = Some((key, epoch, params.clone()));
        }
    }
    let (_, selected_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        history,
        selected_epoch,
    })
}

/// Eval-mode predictions for every row of `ds`.
pub fn predict_dataset(params: &NetworkParameters, ds: &Dataset, exec: Exec) -> Result<Vec<Prediction>> {
    predict_batch(params, ds.x.as_slice(), exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::GroupFlags;
    use crate::Matrix;
    use chrono::NaiveDate;

    /// Two classes whose inputs differ by a constant offset.
    fn separable(n: usize) -> Dataset {
        let l = 16;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            labels.push(y);
            for t in 0..l {
                let noise = ((i * 31 + t * 17) % 13) as f64 / 130.0;
                data.push(if y == 1 { 0.7 + noise } else { 0.2 + noise });
            }
        }
        Dataset {
            columns: (0..l).map(|t| format!("c{t}")).collect(),
            x: Matrix::from_vec(n, l, data).unwrap(),
            labels,
            groups: (0..n).map(|i| GroupFlags([i % 3 == 0; 5])).collect(),
            weights: vec![1.0; n],
            participant_ids: (0..n).map(|i| format!("p{}", i / 2)).collect(),
            dates: vec![NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(); n],
            dropped: Vec::new(),
        }
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            loss: LossKind::Bce,
            hidden: Some(16),
            batch_size: 8,
            learning_rate: 0.05,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn separable_reaches_high_accuracy() {
        let ds = separable(80);
        let out = train(&ds, &TrainConfig { selection: Selection::Last, ..quick() }).unwrap();
        let preds = predict_dataset(&out.params, &ds, Exec::Sequential).unwrap();
        let acc = preds.iter().zip(&ds.labels).filter(|(p, &l)| p.class == l).count() as f64 / 80.0;
        assert!(acc >= 0.95, "accuracy {acc}");
        assert_eq!(out.history.len(), 20);
    }

    #[test]
    fn deterministic_history() {
        let ds = separable(40);
        let cfg = TrainConfig { epochs: 3, loss: LossKind::Mafl, ..quick() };
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequential_matches_parallel() {
        let ds = separable(40);
        let cfg = TrainConfig { epochs: 2, loss: LossKind::Mafl, ..quick() };
        let a = train(&ds, &TrainConfig { exec: Exec::Sequential, ..cfg.clone() }).unwrap();
        let b = train(&ds, &TrainConfig { exec: Exec::Parallel, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { dropout_rate: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn history_csv_has_header() {
        let rec = EpochRecord {
            epoch: 0,
            loss: 1.0,
            bce: 0.5,
            disparity: 0.25,
            dispersion: 0.25,
            train_accuracy: 0.5,
            val_accuracy: 0.5,
            val_spd: 0.0,
            val_fair_count: 5,
        };
        let mut buf = Vec::new();
        write_history_csv(&[rec], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("epoch,loss,bce,disparity,dispersion,train_accuracy,val_accuracy,val_spd,val_fair_count"));
    }
}
