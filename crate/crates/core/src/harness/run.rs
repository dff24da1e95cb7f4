use std::collections::{BTreeMap, BTreeSet};

use super::detect::bias_of;
use super::results::{summarize, ResultRow, ResultTable, Stage};
use super::spec::{DataSource, ExperimentSpec};
use crate::baselines::{train_decision_tree, train_logistic, train_naive_bayes, ModelKind};
use crate::cohort::{ingest_cohort, split_ids, synthesize_cohort, Attribute, Cohort, MinMaxScaler};
use crate::exec::Exec;
use crate::fairness::{report, GroupedOutcomes};
use crate::features::{build_feature_matrix_with, Dataset};
use crate::mitigation::{reweigh, roc_adjust, Mitigation, RepairPlan};
use crate::net::{predict_dataset, train, LossKind};
use crate::rng::derive_seed;
use crate::Result;

/// Training data variant a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Variant {
    Plain,
    Reweighed(Attribute),
    Repaired(Attribute),
}

/// One model fit. Cells that share a job (no mitigation and reject option,
/// or baselines across attributes) reuse its scores.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Job {
    rep: usize,
    model: ModelKind,
    variant: Variant,
    /// Fairness and selection attributes of a network; empty otherwise.
    attributes: Vec<Attribute>,
}

struct JobOutput {
    scores: Vec<f64>,
    selected_epoch: Option<usize>,
}

struct Split {
    train: Dataset,
    test: Dataset,
}

fn load(spec: &ExperimentSpec) -> Result<Cohort> {
    match &spec.data {
        DataSource::Bundle(dir) => ingest_cohort(dir, &spec.plan),
        DataSource::Synth(cfg) => synthesize_cohort(cfg),
    }
}

/// Participant-level split with min-max scaling fitted on the training side.
fn prepare(full: &Dataset, ids: &[String], spec: &ExperimentSpec, rep: usize) -> Result<Split> {
    let (train_ids, _) = split_ids(ids, spec.split_ratio, derive_seed(spec.seed, &[1, rep as u64]))?;
    let train_ids: BTreeSet<&String> = train_ids.iter().collect();
    let (tr, te): (Vec<usize>, Vec<usize>) = (0..full.len()).partition(|&i| train_ids.contains(&full.participant_ids[i]));
    let (mut train, mut test) = (full.select(&tr), full.select(&te));
    let scaler = MinMaxScaler::fit(&train.x)?;
    train.x = scaler.transform(&train.x)?;
    test.x = scaler.transform(&test.x)?;
    Ok(Split { train, test })
}

fn job_for(spec: &ExperimentSpec, rep: usize, attr: Attribute, mitigation: Mitigation, model: ModelKind) -> Job {
    let variant = match mitigation {
        Mitigation::None | Mitigation::Roc => Variant::Plain,
        Mitigation::Reweighing => Variant::Reweighed(attr),
        Mitigation::Dir => Variant::Repaired(attr),
    };
    let attributes = match (model.is_network(), spec.joint_attributes) {
        (false, _) => Vec::new(),
        (true, true) => spec.attributes.clone(),
        (true, false) => vec![attr],
    };
    Job {
        rep,
        model,
        variant,
        attributes,
    }
}

fn run_job(job: &Job, split: &Split, spec: &ExperimentSpec) -> Result<JobOutput> {
    let (mut tr, mut te) = (split.train.clone(), split.test.clone());
    match job.variant {
        Variant::Plain => {}
        Variant::Reweighed(a) => tr.weights = reweigh(&tr.labels, &tr.group_column(a))?.1,
        Variant::Repaired(a) => {
            let plan = RepairPlan::fit_with(&tr.x, &tr.group_column(a), spec.repair_level, Exec::Sequential)?;
            tr.x = plan.transform(&tr.x, &tr.group_column(a))?;
            te.x = plan.transform(&te.x, &te.group_column(a))?;
        }
    }
    let w = Some(tr.weights.as_slice());
    let (scores, selected_epoch) = match job.model {
        ModelKind::MaflCnn | ModelKind::BceCnn => {
            let mut cfg = spec.train.clone();
            cfg.loss = if job.model == ModelKind::MaflCnn { LossKind::Mafl } else { LossKind::Bce };
            cfg.seed = derive_seed(spec.seed, &[2, job.rep as u64]);
            cfg.attributes = job.attributes.clone();
            cfg.exec = Exec::Sequential;
            let out = train(&tr, &cfg)?;
            let p = predict_dataset(&out.params, &te, Exec::Sequential)?;
            (p.iter().map(|p| p.favorable()).collect(), Some(out.selected_epoch))
        }
        ModelKind::Logistic => (train_logistic(&tr.x, &tr.labels, w, spec.logistic)?.predict_proba(&te.x)?, None),
        ModelKind::NaiveBayes => (train_naive_bayes(&tr.x, &tr.labels, w)?.predict_proba(&te.x)?, None),
        ModelKind::DecisionTree => (train_decision_tree(&tr.x, &tr.labels, w, spec.tree)?.predict_proba(&te.x)?, None),
    };
    Ok(JobOutput { scores, selected_epoch })
}

fn measure(
    spec: &ExperimentSpec,
    test: &Dataset,
    attr: Attribute,
    mitigation: Mitigation,
    out: &JobOutput,
) -> Result<(f64, crate::fairness::FairnessReport)> {
    let group = test.group_column(attr);
    let preds: Vec<u8> = if mitigation == Mitigation::Roc {
        roc_adjust(&out.scores, &group, spec.roc)?
    } else {
        out.scores.iter().map(|&p| u8::from(p > 0.5)).collect()
    };
    let correct = preds.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
    let rep = report(&GroupedOutcomes::new(&preds, Some(&test.labels), &group, None)?)?;
    Ok((correct as f64 / preds.len() as f64, rep))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    run_experiment_with(spec, Exec::default())
}

/// Runs the full grid. Cell failures are recorded in their rows; only spec,
/// data loading and encoding errors abort.
pub fn run_experiment_with(spec: &ExperimentSpec, exec: Exec) -> Result<ResultTable> {
    spec.validate()?;
    let cohort = load(spec)?;
    let full = build_feature_matrix_with(&cohort, &spec.plan, exec)?;
    let ids: Vec<String> = full.participant_ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let dataset_bias = spec.attributes.iter().map(|&a| bias_of(a, &full.labels, &full.group_column(a))).collect();

    let splits: Vec<Result<Split>> = (0..spec.repetitions).map(|r| prepare(&full, &ids, spec, r)).collect();
    let mut cells = Vec::new();
    for rep in 0..spec.repetitions {
        for &attr in &spec.attributes {
            for &mitigation in &spec.mitigations {
                for &model in &spec.models {
                    cells.push((rep, attr, mitigation, model, job_for(spec, rep, attr, mitigation, model)));
                }
            }
        }
    }
    let jobs: Vec<Job> = cells.iter().map(|c| c.4.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    log::info!("{} cells, {} model fits", cells.len(), jobs.len());
    let outputs = exec.map(jobs.len(), |i| {
        let job = &jobs[i];
        let split = splits[job.rep].as_ref().map_err(|e| format!("split: {e}"))?;
        run_job(job, split, spec).map_err(|e| e.to_string())
    });
    let by_job: BTreeMap<&Job, &std::result::Result<JobOutput, String>> = jobs.iter().zip(&outputs).collect();

    let rows = cells
        .iter()
        .map(|(rep, attr, mitigation, model, job)| {
            let mut row = ResultRow {
                attribute: *attr,
                mitigation: *mitigation,
                model: *model,
                repetition: *rep,
                stage: Stage::of(*mitigation),
                accuracy: None,
                report: None,
                selected_epoch: None,
                error: None,
            };
            let measured = by_job[job].as_ref().map_err(Clone::clone).and_then(|out| {
                row.selected_epoch = out.selected_epoch;
                let test = &splits[*rep].as_ref().map_err(|e| e.to_string())?.test;
                measure(spec, test, *attr, *mitigation, out).map_err(|e| e.to_string())
            });
            match measured {
                Ok((acc, rep)) => {
                    row.accuracy = Some(acc);
                    row.report = Some(rep);
                }
                Err(e) => {
                    log::warn!("cell {attr}/{mitigation}/{model} repetition {rep} failed: {e}");
                    row.error = Some(e);
                }
            }
            row
        })
        .collect::<Vec<_>>();

    Ok(ResultTable {
        seed: spec.seed,
        repetitions: spec.repetitions,
        instances: full.len(),
        dropped_instances: full.dropped.len(),
        dataset_bias,
        summary: summarize(&rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{BiasStrengths, SynthConfig};
    use crate::features::{Domain, EncodingPlan, FeatureSelection};

    fn small_spec() -> ExperimentSpec {
        let mut s = ExperimentSpec::new(
            11,
            DataSource::Synth(SynthConfig::new(40, BiasStrengths::single(Attribute::Gender, 0.4), 3)),
            vec![ModelKind::Logistic, ModelKind::NaiveBayes, ModelKind::DecisionTree],
        );
        s.plan = EncodingPlan::features(FeatureSelection {
            domains: vec![Domain::Statistical],
            ..Default::default()
        });
        s.mitigations = Mitigation::ALL.to_vec();
        s.repetitions = 2;
        s
    }

    #[test]
    fn grid_shape_and_integrity() {
        let s = small_spec();
        let t = run_experiment(&s).unwrap();
        assert_eq!(t.rows.len(), 2 * 4 * 3);
        assert_eq!(t.summary.len(), 4 * 3);
        assert!(t.rows.iter().all(|r| r.error.is_none()), "{:?}", t.rows.iter().find(|r| r.error.is_some()));
        t.check_integrity().unwrap();
        assert!(t.summary.iter().all(|s| s.accuracy_std.is_some()));
    }

    #[test]
    fn deterministic_json() {
        let mut s = small_spec();
        s.repetitions = 1;
        let a = run_experiment_with(&s, Exec::Sequential).unwrap().to_json().unwrap();
        let b = run_experiment_with(&s, Exec::Parallel).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failed_split_is_recorded_in_rows() {
        let mut s = small_spec();
        s.split_ratio = 0.999;
        let t = run_experiment(&s).unwrap();
        assert!(t.rows.iter().all(|r| r.error.is_some()));
    }
}
