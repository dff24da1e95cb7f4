use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::detect::BiasEntry;
use super::spec::ExperimentSpec;
use crate::baselines::ModelKind;
use crate::cohort::Attribute;
use crate::fairness::{value_serde, FairnessReport, Metric};
use crate::mitigation::Mitigation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Before,
    After,
}

impl Stage {
    pub fn of(m: Mitigation) -> Self {
        if m == Mitigation::None {
            Stage::Before
        } else {
            Stage::After
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Before => "before",
            Stage::After => "after",
        }
    }
}

/// One cell of one repetition, measured on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub attribute: Attribute,
    pub mitigation: Mitigation,
    pub model: ModelKind,
    pub repetition: usize,
    pub stage: Stage,
    pub accuracy: Option<f64>,
    pub report: Option<FairnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-metric sample standard deviations across repetitions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricStd {
    #[serde(with = "value_serde")]
    pub spd: Option<f64>,
    #[serde(with = "value_serde")]
    pub di: Option<f64>,
    #[serde(with = "value_serde")]
    pub eod: Option<f64>,
    #[serde(with = "value_serde")]
    pub aod: Option<f64>,
    #[serde(with = "value_serde")]
    pub theil: Option<f64>,
}

impl MetricStd {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Spd => self.spd,
            Metric::Di => self.di,
            Metric::Eod => self.eod,
            Metric::Aod => self.aod,
            Metric::Theil => self.theil,
        }
    }
}

/// Mean and spread of a cell over its successful repetitions. `report`
/// holds the mean metric values with their verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub attribute: Attribute,
    pub mitigation: Mitigation,
    pub model: ModelKind,
    pub stage: Stage,
    pub runs: usize,
    pub failures: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub report: FairnessReport,
    pub std: MetricStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub seed: u64,
    pub repetitions: usize,
    pub instances: usize,
    pub dropped_instances: usize,
    pub dataset_bias: Vec<BiasEntry>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// `(mean, sample std)`; the std needs two values and finite entries.
pub(crate) fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mean = (!mean.is_nan()).then_some(mean);
    let std = (v.len() >= 2 && v.iter().all(|x| x.is_finite())).then(|| {
        let m = mean.unwrap_or(0.0);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (mean, std)
}

pub(crate) fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Attribute, Mitigation, ModelKind)> = rows.iter().map(|r| (r.attribute, r.mitigation, r.model)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(a, m, k)| {
            let cell: Vec<&ResultRow> = rows.iter().filter(|r| (r.attribute, r.mitigation, r.model) == (a, m, k)).collect();
            let ok: Vec<&ResultRow> = cell.iter().copied().filter(|r| r.error.is_none()).collect();
            let acc: Vec<f64> = ok.iter().filter_map(|r| r.accuracy).collect();
            let (accuracy_mean, accuracy_std) = mean_std(&acc);
            let mut stds = [None; 5];
            let values = Metric::ALL.map(|metric| {
                let v: Vec<f64> = ok.iter().filter_map(|r| r.report.as_ref()?.value(metric)).collect();
                let (mean, std) = mean_std(&v);
                stds[metric as usize] = std;
                mean.ok_or_else(|| Error::UndefinedRate(format!("{metric} undefined in every repetition")))
            });
            SummaryRow {
                attribute: a,
                mitigation: m,
                model: k,
                stage: Stage::of(m),
                runs: ok.len(),
                failures: cell.len() - ok.len(),
                accuracy_mean,
                accuracy_std,
                report: FairnessReport::from_values(values),
                std: MetricStd {
                    spd: stds[0],
                    di: stds[1],
                    eod: stds[2],
                    aod: stds[3],
                    theil: stds[4],
                },
            }
        })
        .collect()
}

impl ResultTable {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Every stored verdict and fair count must follow from its values.
    pub fn check_integrity(&self) -> Result<()> {
        for r in &self.rows {
            if let Some(rep) = &r.report {
                rep.check_integrity().map_err(|e| {
                    Error::Integrity(format!("{}/{}/{} repetition {}: {e}", r.attribute, r.mitigation, r.model, r.repetition))
                })?;
            }
        }
        for s in &self.summary {
            s.report
                .check_integrity()
                .map_err(|e| Error::Integrity(format!("{}/{}/{} summary: {e}", s.attribute, s.mitigation, s.model)))?;
        }
        Ok(())
    }

    /// Per-repetition rows as CSV.
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["attribute", "mitigation", "model", "repetition", "stage", "accuracy"];
        header.extend(Metric::ALL.map(Metric::name));
        header.extend(["fair_count", "error"]);
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.attribute.to_string(),
                r.mitigation.to_string(),
                r.model.to_string(),
                r.repetition.to_string(),
                r.stage.name().to_string(),
                fmt_opt(r.accuracy),
            ];
            rec.extend(Metric::ALL.map(|m| fmt_opt(r.report.as_ref().and_then(|x| x.value(m)))));
            rec.push(r.report.as_ref().map_or(String::new(), |x| x.fair_count.to_string()));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        finish(w)
    }

    /// Long-format plot data: `metric, mean, std, stage` then the cell.
    pub fn plot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "mean", "std", "stage", "attribute", "mitigation", "model", "runs"]).map_err(csv_err)?;
        for s in &self.summary {
            let mut lines = vec![("accuracy", s.accuracy_mean, s.accuracy_std)];
            lines.extend(Metric::ALL.map(|m| (m.name(), s.report.value(m), s.std.get(m))));
            for (metric, mean, std) in lines {
                w.write_record([
                    metric.to_string(),
                    fmt_opt(mean),
                    fmt_opt(std),
                    s.stage.name().to_string(),
                    s.attribute.to_string(),
                    s.mitigation.to_string(),
                    s.model.to_string(),
                    s.runs.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        finish(w)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

/// Writes `results.json`, `results.csv`, `plot.csv` and `spec.json`.
pub fn write_outputs(table: &ResultTable, spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("results.json", table.to_json()?),
        ("results.csv", table.rows_csv()?),
        ("plot.csv", table.plot_csv()?),
        ("spec.json", spec.to_json()?),
    ];
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub mitigation: Mitigation,
    pub model: ModelKind,
    pub fair_count: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRanking {
    pub attribute: Attribute,
    /// Best first; the first entry is the winner.
    pub rows: Vec<RankedRow>,
}

impl AttributeRanking {
    pub fn winner(&self) -> Option<&RankedRow> {
        self.rows.first()
    }
}

/// Ranks summary rows per attribute by fair count, then accuracy, after an
/// integrity check. Rows without any successful run are left out.
pub fn rank(table: &ResultTable) -> Result<Vec<AttributeRanking>> {
    table.check_integrity()?;
    let mut attrs: Vec<Attribute> = table.summary.iter().map(|s| s.attribute).collect();
    attrs.sort();
    attrs.dedup();
    Ok(attrs
        .into_iter()
        .map(|a| {
            let mut rows: Vec<RankedRow> = table
                .summary
                .iter()
                .filter(|s| s.attribute == a && s.runs > 0)
                .map(|s| RankedRow {
                    mitigation: s.mitigation,
                    model: s.model,
                    fair_count: s.report.fair_count,
                    accuracy: s.accuracy_mean,
                })
                .collect();
            // Stable sort keeps grid order on full ties.
            rows.sort_by(|x, y| {
                y.fair_count
                    .cmp(&x.fair_count)
                    .then(y.accuracy.unwrap_or(f64::NEG_INFINITY).total_cmp(&x.accuracy.unwrap_or(f64::NEG_INFINITY)))
            });
            AttributeRanking { attribute: a, rows }
        })
        .collect())
}

/// Plain-text ranking with the winner of each attribute marked `*`.
pub fn render_ranking(rankings: &[AttributeRanking]) -> String {
    let mut out = String::new();
    for r in rankings {
        let _ = writeln!(out, "attribute: {}", r.attribute);
        let _ = writeln!(out, "  {:<3}{:<12}{:<15}{:>6}{:>10}", "", "mitigation", "model", "fair", "accuracy");
        for (i, row) in r.rows.iter().enumerate() {
            let acc = row.accuracy.map_or("-".to_string(), |a| format!("{a:.4}"));
            let mark = if i == 0 { "*" } else { "" };
            let _ = writeln!(out, "  {:<3}{:<12}{:<15}{:>6}{:>10}", mark, row.mitigation.name(), row.model.name(), row.fair_count, acc);
        }
    }
    out
}
