//! Per-day feature extraction, deviance transforms and model-input assembly.
//!
//! Feature keys are namespaced `domain.name.channel`, e.g.
//! `spectral.spectral_centroid.hr`. Multi-valued features expand to
//! `name_0`, `name_1`, ... in a fixed order. Deviance columns append the
//! variant: `statistical.mean.hr.mathematical`.

mod deviance;
pub mod spectral;
pub mod statistical;
pub(crate) mod stats;
pub mod temporal;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

pub use deviance::{deviance, logcosh, DevianceVariant, DevianceVector, LOG_EPSILON};
pub use spectral::extract_spectral;
pub use statistical::extract_statistical;
pub use temporal::extract_temporal;

use crate::cohort::{Attribute, Cohort, DayRecord, GroupFlags, ImputePolicy, Participant, MINUTES_PER_DAY};
use crate::exec::Exec;
use crate::{Error, Matrix, Result};

/// Bumped whenever a definition, default parameter or column order changes.
pub const FEATURE_SET_VERSION: u32 = 1;
/// Sampling rate of minute-resolution channels.
pub const MINUTE_RATE_HZ: f64 = 1.0 / 60.0;

/// Output of a single-domain extractor: values aligned with a static name list.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedValues {
    pub names: &'static [String],
    pub values: Vec<f64>,
}

impl NamedValues {
    pub(crate) fn new(names: &'static [String], values: Vec<f64>) -> Self {
        debug_assert_eq!(names.len(), values.len());
        NamedValues { names, values }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `name` for single-valued features, `name_0..name_{k-1}` otherwise.
pub(crate) fn expand_names(base: &[(&str, usize)]) -> Vec<String> {
    let mut out = Vec::new();
    for &(name, k) in base {
        if k == 1 {
            out.push(name.to_string());
        } else {
            out.extend((0..k).map(|i| format!("{name}_{i}")));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Statistical,
    Temporal,
    Spectral,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Statistical, Domain::Temporal, Domain::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Statistical => "statistical",
            Domain::Temporal => "temporal",
            Domain::Spectral => "spectral",
        }
    }

    /// Expanded feature names of the domain.
    pub fn feature_names(self) -> &'static [String] {
        match self {
            Domain::Statistical => statistical::names(),
            Domain::Temporal => temporal::names(),
            Domain::Spectral => spectral::names(),
        }
    }

    /// Number of distinct (unexpanded) features.
    pub fn base_count(self) -> usize {
        match self {
            Domain::Statistical => statistical::BASE.len(),
            Domain::Temporal => temporal::BASE.len(),
            Domain::Spectral => spectral::BASE.len(),
        }
    }

    pub fn extract(self, x: &[f64], fs: f64) -> Result<NamedValues> {
        match self {
            Domain::Statistical => extract_statistical(x),
            Domain::Temporal => extract_temporal(x),
            Domain::Spectral => extract_spectral(x, fs),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown feature domain `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "hr")]
    HeartRate,
    #[serde(rename = "steps")]
    Steps,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 2] = [ChannelKind::HeartRate, ChannelKind::Steps];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::HeartRate => "hr",
            ChannelKind::Steps => "steps",
        }
    }

    pub fn series(self, day: &DayRecord) -> &[f64] {
        match self {
            ChannelKind::HeartRate => &day.heart_rate.values,
            ChannelKind::Steps => &day.steps.values,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hr" | "heart_rate" => Ok(ChannelKind::HeartRate),
            "steps" => Ok(ChannelKind::Steps),
            _ => Err(Error::invalid(format!("unknown channel `{s}`"))),
        }
    }
}

/// Ordered feature map of one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub keys: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.keys.iter().position(|k| k == key).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Keys produced by [`extract_day`] for the given selection.
pub fn feature_keys(domains: &[Domain], channels: &[ChannelKind]) -> Vec<String> {
    let mut keys = Vec::new();
    for &d in domains {
        for &c in channels {
            keys.extend(d.feature_names().iter().map(|n| format!("{d}.{n}.{c}")));
        }
    }
    keys
}

/// Features of one day for every selected domain and channel.
pub fn extract_day(day: &DayRecord, domains: &[Domain], channels: &[ChannelKind]) -> Result<FeatureVector> {
    let mut values = Vec::new();
    for &d in domains {
        for &c in channels {
            values.extend(d.extract(c.series(day), MINUTE_RATE_HZ)?.values);
        }
    }
    Ok(FeatureVector {
        keys: feature_keys(domains, channels),
        values,
    })
}

/// Non-series model inputs.
///
/// `age` is in years; the others are 0/1 indicators of male, Asian, not
/// Hispanic or Latino and dementia present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemographicSlot {
    Age,
    Gender,
    Race,
    Ethnicity,
    Dementia,
}

impl DemographicSlot {
    pub fn key(self) -> &'static str {
        match self {
            DemographicSlot::Age => "demographic.age",
            DemographicSlot::Gender => "demographic.gender",
            DemographicSlot::Race => "demographic.race",
            DemographicSlot::Ethnicity => "demographic.ethnicity",
            DemographicSlot::Dementia => "demographic.dementia",
        }
    }

    pub fn value(self, p: &Participant) -> f64 {
        let pr = &p.profile;
        match self {
            DemographicSlot::Age => f64::from(pr.age),
            DemographicSlot::Gender => f64::from(u8::from(pr.is_privileged(Attribute::Gender))),
            DemographicSlot::Race => f64::from(u8::from(pr.is_privileged(Attribute::Race))),
            DemographicSlot::Ethnicity => f64::from(u8::from(pr.is_privileged(Attribute::Ethnicity))),
            DemographicSlot::Dementia => f64::from(u8::from(pr.dementia)),
        }
    }

    pub fn default_raw() -> Vec<DemographicSlot> {
        vec![DemographicSlot::Age, DemographicSlot::Gender, DemographicSlot::Dementia]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub domains: Vec<Domain>,
    pub channels: Vec<ChannelKind>,
    /// Empty means the current-day features are used as-is.
    #[serde(default)]
    pub variants: Vec<DevianceVariant>,
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection {
            domains: Domain::ALL.to_vec(),
            channels: ChannelKind::ALL.to_vec(),
            variants: vec![DevianceVariant::Mathematical],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InputMode {
    /// Demographics followed by the 1440 heart-rate and 1440 step minutes of
    /// the assessment day.
    Raw,
    Features(FeatureSelection),
}

/// How cohort instances become model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    #[serde(default = "default_version")]
    pub version: u32,
    pub input: InputMode,
    #[serde(default)]
    pub demographics: Vec<DemographicSlot>,
    #[serde(default)]
    pub impute: ImputePolicy,
}

fn default_version() -> u32 {
    FEATURE_SET_VERSION
}

impl Default for EncodingPlan {
    fn default() -> Self {
        EncodingPlan::raw()
    }
}

impl EncodingPlan {
    /// Raw minutes with age, gender and dementia slots (2883 inputs).
    pub fn raw() -> Self {
        EncodingPlan {
            version: FEATURE_SET_VERSION,
            input: InputMode::Raw,
            demographics: DemographicSlot::default_raw(),
            impute: ImputePolicy::default(),
        }
    }

    /// Feature mode without demographic slots.
    pub fn features(selection: FeatureSelection) -> Self {
        EncodingPlan {
            version: FEATURE_SET_VERSION,
            input: InputMode::Features(selection),
            demographics: Vec::new(),
            impute: ImputePolicy::default(),
        }
    }

    pub fn with_demographics(mut self, slots: Vec<DemographicSlot>) -> Self {
        self.demographics = slots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FEATURE_SET_VERSION {
            return Err(Error::invalid(format!(
                "plan version {} does not match feature set version {FEATURE_SET_VERSION}",
                self.version
            )));
        }
        if let InputMode::Features(sel) = &self.input {
            if sel.domains.is_empty() || sel.channels.is_empty() {
                return Err(Error::invalid("feature plan needs at least one domain and one channel"));
            }
        }
        Ok(())
    }

    /// Whether instances need the previous day's record.
    pub fn needs_prior_day(&self) -> bool {
        matches!(&self.input, InputMode::Features(s) if !s.variants.is_empty())
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.demographics.iter().map(|d| d.key().to_string()).collect();
        match &self.input {
            InputMode::Raw => {
                for c in ChannelKind::ALL {
                    cols.extend((0..MINUTES_PER_DAY).map(|m| format!("raw.{c}.{m}")));
                }
            }
            InputMode::Features(sel) => {
                for &d in &sel.domains {
                    for &c in &sel.channels {
                        let keys = feature_keys(&[d], &[c]);
                        if sel.variants.is_empty() {
                            cols.extend(keys);
                        } else {
                            for &v in &sel.variants {
                                cols.extend(keys.iter().map(|k| format!("{k}.{v}")));
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: EncodingPlan = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Encodes one instance, or explains why it cannot be encoded.
    fn encode(&self, participant: &Participant, day: &DayRecord, prior: Option<&DayRecord>) -> std::result::Result<Vec<f64>, String> {
        let mut row: Vec<f64> = self.demographics.iter().map(|d| d.value(participant)).collect();
        match &self.input {
            InputMode::Raw => {
                for c in ChannelKind::ALL {
                    row.extend_from_slice(c.series(day));
                }
            }
            InputMode::Features(sel) => {
                for &d in &sel.domains {
                    for &c in &sel.channels {
                        let cur = d
                            .extract(c.series(day), MINUTE_RATE_HZ)
                            .map_err(|e| format!("{d} {c}: {e}"))?;
                        if sel.variants.is_empty() {
                            row.extend(cur.values);
                            continue;
                        }
                        let prior = prior.ok_or_else(|| "missing prior day".to_string())?;
                        let prev = d
                            .extract(c.series(prior), MINUTE_RATE_HZ)
                            .map_err(|e| format!("{d} {c} prior day: {e}"))?;
                        for &v in &sel.variants {
                            row.extend(cur.values.iter().zip(&prev.values).map(|(&a, &b)| v.apply(a, b)));
                        }
                    }
                }
            }
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite input at column {i}"));
        }
        Ok(row)
    }
}

/// An instance that could not be encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedInstance {
    pub participant_id: String,
    pub date: NaiveDate,
    pub reason: String,
}

/// Encoded instances, one row per kept label event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub x: Matrix,
    pub labels: Vec<u8>,
    pub groups: Vec<GroupFlags>,
    pub weights: Vec<f64>,
    pub participant_ids: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub dropped: Vec<DroppedInstance>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// 0/1 privileged indicator per row for `attr`.
    pub fn group_column(&self, attr: Attribute) -> Vec<u8> {
        self.groups.iter().map(|g| g.bit(attr)).collect()
    }

    /// Rows at `indices`, in that order, without the drop log.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            x: self.x.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
            participant_ids: indices.iter().map(|&i| self.participant_ids[i].clone()).collect(),
            dates: indices.iter().map(|&i| self.dates[i]).collect(),
            dropped: Vec::new(),
        }
    }

    /// Writes `participant_id, date, label, weight` followed by the columns.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::invalid(format!("writing feature matrix: {e}"));
        let mut header = vec!["participant_id".to_string(), "date".into(), "label".into(), "weight".into()];
        header.extend(self.columns.iter().cloned());
        wr.write_record(&header).map_err(to_err)?;
        for r in 0..self.len() {
            let mut rec = vec![
                self.participant_ids[r].clone(),
                self.dates[r].format("%Y-%m-%d").to_string(),
                self.labels[r].to_string(),
                format!("{}", self.weights[r]),
            ];
            rec.extend(self.x.row(r).iter().map(|v| format!("{v}")));
            wr.write_record(&rec).map_err(to_err)?;
        }
        wr.flush().map_err(|e| Error::invalid(format!("writing feature matrix: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Encodes every label event of `cohort` under `plan`. Instances without a
/// record for the assessment day, or without the previous day's record when
/// the plan uses deviance, are dropped with a logged reason.
pub fn build_feature_matrix(cohort: &Cohort, plan: &EncodingPlan) -> Result<Dataset> {
    build_feature_matrix_with(cohort, plan, Exec::default())
}

pub fn build_feature_matrix_with(cohort: &Cohort, plan: &EncodingPlan, exec: Exec) -> Result<Dataset> {
    plan.validate()?;
    let days = cohort.day_index();
    let people = cohort.participant_index();
    let events = &cohort.labels;
    let rows = exec.map(events.len(), |i| {
        let ev = &events[i];
        let pid = ev.participant_id.as_str();
        let participant = people.get(pid).ok_or_else(|| "unknown participant".to_string())?;
        let day = days.get(&(pid, ev.date)).ok_or_else(|| "missing assessment-day record".to_string())?;
        let prior = if plan.needs_prior_day() {
            ev.date.checked_sub_days(Days::new(1)).and_then(|d| days.get(&(pid, d)).copied())
        } else {
            None
        };
        plan.encode(participant, day, prior)
    });

    let columns = plan.columns();
    let mut data = Vec::new();
    let mut ds = Dataset {
        columns,
        x: Matrix::zeros(0, 0),
        labels: Vec::new(),
        groups: Vec::new(),
        weights: Vec::new(),
        participant_ids: Vec::new(),
        dates: Vec::new(),
        dropped: Vec::new(),
    };
    for (ev, row) in events.iter().zip(rows) {
        match row {
            Ok(r) => {
                debug_assert_eq!(r.len(), ds.columns.len());
                data.extend(r);
                ds.labels.push(ev.label);
                ds.groups.push(people[ev.participant_id.as_str()].profile.groups());
                ds.weights.push(1.0);
                ds.participant_ids.push(ev.participant_id.clone());
                ds.dates.push(ev.date);
            }
            Err(reason) => {
                log::warn!("dropped instance {} {}: {reason}", ev.participant_id, ev.date);
                ds.dropped.push(DroppedInstance {
                    participant_id: ev.participant_id.clone(),
                    date: ev.date,
                    reason,
                });
            }
        }
    }
    if ds.labels.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    ds.x = Matrix::from_vec(ds.labels.len(), ds.columns.len(), data)?;
    Ok(ds)
}
