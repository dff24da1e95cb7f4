use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{LogisticConfig, ModelKind, TreeConfig};
use crate::cohort::{Attribute, SynthConfig};
use crate::features::{EncodingPlan, FeatureSelection};
use crate::mitigation::{Mitigation, RocConfig};
use crate::net::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Directory holding a CSV bundle.
    Bundle(PathBuf),
    Synth(SynthConfig),
}

/// One experiment. Only `seed`, `data` and `models` are required in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub data: DataSource,
    #[serde(default = "default_plan")]
    pub plan: EncodingPlan,
    #[serde(default = "default_attributes")]
    pub attributes: Vec<Attribute>,
    /// Trains the fairness loss over every listed attribute at once instead
    /// of one attribute per grid row.
    #[serde(default)]
    pub joint_attributes: bool,
    pub models: Vec<ModelKind>,
    #[serde(default = "default_mitigations")]
    pub mitigations: Vec<Mitigation>,
    /// Network settings; `seed` and `attributes` are set per cell.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub logistic: LogisticConfig,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default)]
    pub roc: RocConfig,
    #[serde(default = "default_repair")]
    pub repair_level: f64,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_plan() -> EncodingPlan {
    EncodingPlan::features(FeatureSelection::default())
}
fn default_attributes() -> Vec<Attribute> {
    vec![Attribute::Gender]
}
fn default_mitigations() -> Vec<Mitigation> {
    vec![Mitigation::None]
}
fn default_repair() -> f64 {
    1.0
}
fn default_split() -> f64 {
    0.8
}
fn default_repetitions() -> usize {
    5
}

impl ExperimentSpec {
    /// Spec with defaults around the required fields.
    pub fn new(seed: u64, data: DataSource, models: Vec<ModelKind>) -> Self {
        ExperimentSpec {
            seed,
            data,
            plan: default_plan(),
            attributes: default_attributes(),
            joint_attributes: false,
            models,
            mitigations: default_mitigations(),
            train: TrainConfig::default(),
            logistic: LogisticConfig::default(),
            tree: TreeConfig::default(),
            roc: RocConfig::default(),
            repair_level: default_repair(),
            split_ratio: default_split(),
            repetitions: default_repetitions(),
            out_dir: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.models.is_empty() {
            return bad("model list is empty".into());
        }
        if self.attributes.is_empty() {
            return bad("attribute list is empty".into());
        }
        if self.mitigations.is_empty() {
            return bad("mitigation list is empty (use [\"none\"])".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio {} outside (0, 1)", self.split_ratio));
        }
        if !(0.0..=1.0).contains(&self.repair_level) {
            return bad(format!("repair level {} outside [0, 1]", self.repair_level));
        }
        let spec_err = |e: Error| Error::Spec(e.to_string());
        self.plan.validate().map_err(spec_err)?;
        self.roc.validate().map_err(spec_err)?;
        let mut t = self.train.clone();
        t.attributes = self.attributes.clone();
        t.validate().map_err(spec_err)?;
        if self.logistic.max_iter == 0 || self.tree.max_depth == 0 {
            return bad("logistic max_iter and tree max_depth must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json() {
        let s = ExperimentSpec::from_json(r#"{"seed": 3, "data": {"synth": {"size": 20}}, "models": ["mafl", "logistic"]}"#).unwrap();
        assert_eq!(s.repetitions, 5);
        assert_eq!(s.models, vec![ModelKind::MaflCnn, ModelKind::Logistic]);
        assert_eq!(ExperimentSpec::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            r#"{"seed": 3, "data": {"synth": {}}, "models": []}"#,
            r#"{"data": {"synth": {}}, "models": ["mafl"]}"#,
            r#"{"seed": 3, "data": {"synth": {}}, "models": ["mafl"], "attributes": ["height"]}"#,
            r#"{"seed": 3, "data": {"synth": {}}, "models": ["mafl"], "repetitions": 0}"#,
            r#"{"seed": 3, "data": {"synth": {}}, "models": ["mafl"], "typo": 1}"#,
        ] {
            assert!(matches!(ExperimentSpec::from_json(bad), Err(Error::Spec(_))), "{bad}");
        }
    }
}
