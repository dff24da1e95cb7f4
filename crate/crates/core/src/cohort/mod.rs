//! Participants, wearable day records, pain assessments and derived labels.

mod impute;
mod ingest;
mod labels;
mod normalize;
mod split;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use impute::{impute, ImputePolicy};
pub use ingest::{ingest_cohort, write_bundle, ASSESSMENTS_FILE, DAYS_FILE, PARTICIPANTS_FILE};
pub use labels::{derive_labels, LabelEvent};
pub use normalize::{minmax_normalize, MinMaxScaler};
pub use split::{split, split_ids};
pub use synth::{synthesize_cohort, BiasStrengths, SynthConfig};

pub const MINUTES_PER_DAY: usize = 1440;
/// Maximum fraction of missing minutes per channel for a day to be kept.
pub const MAX_MISSING_FRACTION: f64 = 0.10;
pub const COHORT_SCHEMA_VERSION: u32 = 1;
/// Ages strictly below this are privileged.
pub const ELDERLY_AGE: u32 = 65;

/// The five protected attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Gender,
    Race,
    Ethnicity,
    Age,
    Dementia,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Gender,
        Attribute::Race,
        Attribute::Ethnicity,
        Attribute::Age,
        Attribute::Dementia,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Gender => "gender",
            Attribute::Race => "race",
            Attribute::Ethnicity => "ethnicity",
            Attribute::Age => "age",
            Attribute::Dementia => "dementia",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gender" | "sex" => Ok(Attribute::Gender),
            "race" => Ok(Attribute::Race),
            "ethnicity" => Ok(Attribute::Ethnicity),
            "age" => Ok(Attribute::Age),
            "dementia" | "cognitive" => Ok(Attribute::Dementia),
            _ => Err(Error::UnknownAttribute(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    Asian,
    White,
    Black,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ethnicity {
    NotHispanicOrLatino,
    HispanicOrLatino,
    Unknown,
}

fn normalise_token(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalise_token(s).as_str() {
            "male" | "m" | "man" => Ok(Gender::Male),
            "female" | "f" | "woman" => Ok(Gender::Female),
            "" => Err(Error::invalid("empty gender")),
            _ => Ok(Gender::Other),
        }
    }
}

impl FromStr for Race {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalise_token(s).as_str() {
            "asian" => Ok(Race::Asian),
            "white" => Ok(Race::White),
            "black" | "black_or_african_american" => Ok(Race::Black),
            "" => Err(Error::invalid("empty race")),
            _ => Ok(Race::Other),
        }
    }
}

impl FromStr for Ethnicity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalise_token(s).as_str() {
            "not_hispanic_or_latino" | "not_hispanic" | "non_hispanic" | "not_hispanic_or_latin" => {
                Ok(Ethnicity::NotHispanicOrLatino)
            }
            "hispanic_or_latino" | "hispanic" | "latino" | "hispanic_or_latin" => {
                Ok(Ethnicity::HispanicOrLatino)
            }
            "" => Err(Error::invalid("empty ethnicity")),
            _ => Ok(Ethnicity::Unknown),
        }
    }
}

pub(crate) fn parse_flag(s: &str) -> Result<bool> {
    match normalise_token(s).as_str() {
        "1" | "true" | "yes" | "present" | "y" => Ok(true),
        "0" | "false" | "no" | "absent" | "n" => Ok(false),
        other => Err(Error::invalid(format!("not a boolean flag: `{other}`"))),
    }
}

/// Privileged-group indicator per attribute, indexed by [`Attribute::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupFlags(pub [bool; 5]);

impl GroupFlags {
    pub fn get(&self, attr: Attribute) -> bool {
        self.0[attr.index()]
    }

    pub fn bit(&self, attr: Attribute) -> u8 {
        u8::from(self.get(attr))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedProfile {
    pub gender: Gender,
    pub race: Race,
    pub ethnicity: Ethnicity,
    pub age: u32,
    pub dementia: bool,
}

impl ProtectedProfile {
    pub fn is_privileged(&self, attr: Attribute) -> bool {
        match attr {
            Attribute::Gender => self.gender == Gender::Male,
            Attribute::Race => self.race == Race::Asian,
            Attribute::Ethnicity => self.ethnicity == Ethnicity::NotHispanicOrLatino,
            Attribute::Age => self.age < ELDERLY_AGE,
            Attribute::Dementia => !self.dementia,
        }
    }

    pub fn groups(&self) -> GroupFlags {
        GroupFlags(Attribute::ALL.map(|a| self.is_privileged(a)))
    }
}

/// 1 when `profile` falls in the privileged group of the named attribute.
pub fn privileged_flag(profile: &ProtectedProfile, attribute: &str) -> Result<u8> {
    let attr: Attribute = attribute.parse()?;
    Ok(u8::from(profile.is_privileged(attr)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub profile: ProtectedProfile,
}

/// One minute-resolution channel. Missing slots hold `NaN` until imputed; the
/// mask survives imputation so the provenance of every slot stays visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl Channel {
    pub fn complete(values: Vec<f64>) -> Self {
        let missing = vec![false; values.len()];
        Channel { values, missing }
    }

    pub fn from_options(slots: &[Option<f64>]) -> Self {
        Channel {
            values: slots.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            missing: slots.iter().map(Option::is_none).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        self.missing_count() as f64 / self.len() as f64
    }

    pub fn is_filled(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub participant_id: String,
    pub date: NaiveDate,
    pub heart_rate: Channel,
    pub steps: Channel,
}

impl DayRecord {
    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        for (name, ch) in [("heart_rate", &self.heart_rate), ("steps", &self.steps)] {
            if ch.len() != MINUTES_PER_DAY || ch.missing.len() != MINUTES_PER_DAY {
                return Err(format!("{name} has {} slots, expected {MINUTES_PER_DAY}", ch.len()));
            }
            let frac = ch.missing_fraction();
            if frac > MAX_MISSING_FRACTION {
                return Err(format!(
                    "{name} missing fraction {:.3} exceeds {MAX_MISSING_FRACTION}",
                    frac
                ));
            }
            for (v, &m) in ch.values.iter().zip(&ch.missing) {
                if !m && !(v.is_finite() && *v >= 0.0) {
                    return Err(format!("{name} holds invalid value {v}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PainAssessment {
    pub participant_id: String,
    pub date: NaiveDate,
    pub vas_score: u8,
}

/// A rejected row, day or participant, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub scope: String,
    pub reason: String,
}

impl Rejection {
    pub(crate) fn new(scope: impl Into<String>, reason: impl Into<String>) -> Self {
        let r = Rejection {
            scope: scope.into(),
            reason: reason.into(),
        };
        log::warn!("rejected {}: {}", r.scope, r.reason);
        r
    }
}

/// Validated cohort: every day record is imputed and every participant
/// satisfies the inclusion rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub schema_version: u32,
    pub participants: Vec<Participant>,
    pub days: Vec<DayRecord>,
    pub assessments: Vec<PainAssessment>,
    pub labels: Vec<LabelEvent>,
    #[serde(default)]
    pub rejections: Vec<Rejection>,
}

impl Cohort {
    /// Applies the inclusion rule, imputes kept day records and derives
    /// labels. Rejections from earlier stages can be passed in `rejections`.
    pub fn assemble(
        participants: Vec<Participant>,
        days: Vec<DayRecord>,
        assessments: Vec<PainAssessment>,
        policy: ImputePolicy,
        mut rejections: Vec<Rejection>,
    ) -> Result<Cohort> {
        let mut by_pid_days: BTreeMap<String, Vec<DayRecord>> = BTreeMap::new();
        let mut seen_days: BTreeSet<(String, NaiveDate)> = BTreeSet::new();
        for d in days {
            let key = (d.participant_id.clone(), d.date);
            if !seen_days.insert(key) {
                rejections.push(Rejection::new(
                    format!("day {} {}", d.participant_id, d.date),
                    "duplicate day record",
                ));
                continue;
            }
            by_pid_days.entry(d.participant_id.clone()).or_default().push(d);
        }
        let mut by_pid_assess: BTreeMap<String, Vec<PainAssessment>> = BTreeMap::new();
        for a in assessments {
            if a.vas_score > 10 {
                rejections.push(Rejection::new(
                    format!("assessment {} {}", a.participant_id, a.date),
                    format!("vas_score {} outside 0-10", a.vas_score),
                ));
                continue;
            }
            by_pid_assess.entry(a.participant_id.clone()).or_default().push(a);
        }

        let mut seen_pids = BTreeSet::new();
        let mut kept_participants = Vec::new();
        let mut kept_days = Vec::new();
        let mut kept_assessments = Vec::new();
        let mut labels = Vec::new();

        for p in participants {
            if !seen_pids.insert(p.id.clone()) {
                rejections.push(Rejection::new(format!("participant {}", p.id), "duplicate participant"));
                continue;
            }
            let scope = format!("participant {}", p.id);
            let mut assess = by_pid_assess.remove(&p.id).unwrap_or_default();
            assess.sort_by_key(|a| a.date);
            let before = assess.len();
            assess.dedup_by_key(|a| a.date);
            if assess.len() != before {
                rejections.push(Rejection::new(scope.clone(), "duplicate assessment dates dropped"));
            }
            if !has_two_in_one_year(&assess) {
                rejections.push(Rejection::new(scope, "insufficient assessments"));
                continue;
            }

            let pdays = by_pid_days.remove(&p.id).unwrap_or_default();
            let (hr_missing, st_missing, slots) = pdays.iter().fold((0, 0, 0), |acc, d| {
                (
                    acc.0 + d.heart_rate.missing_count(),
                    acc.1 + d.steps.missing_count(),
                    acc.2 + d.heart_rate.len(),
                )
            });
            if slots > 0 {
                let worst = hr_missing.max(st_missing) as f64 / slots as f64;
                if worst > MAX_MISSING_FRACTION {
                    rejections.push(Rejection::new(
                        scope,
                        format!("missing wearable data fraction {worst:.3} exceeds {MAX_MISSING_FRACTION}"),
                    ));
                    continue;
                }
            }
            let mut good_days = Vec::new();
            for mut d in pdays {
                if let Err(reason) = d.validate() {
                    rejections.push(Rejection::new(format!("day {} {}", d.participant_id, d.date), reason));
                    continue;
                }
                match (impute(&d.heart_rate, policy), impute(&d.steps, policy)) {
                    (Ok(hr), Ok(st)) => {
                        d.heart_rate.values = hr;
                        d.steps.values = st;
                        good_days.push(d);
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        rejections.push(Rejection::new(format!("day {} {}", d.participant_id, d.date), e.to_string()));
                    }
                }
            }
            if good_days.is_empty() {
                rejections.push(Rejection::new(scope, "no usable wearable days"));
                continue;
            }
            good_days.sort_by_key(|d| d.date);

            for (date, label) in derive_labels(&assess) {
                labels.push(LabelEvent {
                    participant_id: p.id.clone(),
                    date,
                    label,
                });
            }
            kept_days.extend(good_days);
            kept_assessments.extend(assess);
            kept_participants.push(p);
        }
        for (pid, _) in by_pid_assess {
            rejections.push(Rejection::new(format!("assessments of {pid}"), "unknown participant"));
        }
        for (pid, _) in by_pid_days {
            rejections.push(Rejection::new(format!("days of {pid}"), "unknown participant"));
        }

        if kept_participants.is_empty() {
            return Err(Error::EmptyCohort(format!(
                "no participant passed the inclusion rule ({} rejections)",
                rejections.len()
            )));
        }
        Ok(Cohort {
            schema_version: COHORT_SCHEMA_VERSION,
            participants: kept_participants,
            days: kept_days,
            assessments: kept_assessments,
            labels,
            rejections,
        })
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.id == id)
    }

    pub fn participant_index(&self) -> BTreeMap<&str, &Participant> {
        self.participants.iter().map(|p| (p.id.as_str(), p)).collect()
    }

    pub fn day_index(&self) -> BTreeMap<(&str, NaiveDate), &DayRecord> {
        self.days
            .iter()
            .map(|d| ((d.participant_id.as_str(), d.date), d))
            .collect()
    }

    /// Keeps only the listed participants and their records.
    pub fn subset(&self, ids: &BTreeSet<String>) -> Cohort {
        Cohort {
            schema_version: self.schema_version,
            participants: self.participants.iter().filter(|p| ids.contains(&p.id)).cloned().collect(),
            days: self.days.iter().filter(|d| ids.contains(&d.participant_id)).cloned().collect(),
            assessments: self
                .assessments
                .iter()
                .filter(|a| ids.contains(&a.participant_id))
                .cloned()
                .collect(),
            labels: self.labels.iter().filter(|l| ids.contains(&l.participant_id)).cloned().collect(),
            rejections: Vec::new(),
        }
    }

    /// Ground-truth labels with the privileged indicator for `attr`, one per
    /// label event.
    pub fn labels_and_groups(&self, attr: Attribute) -> (Vec<u8>, Vec<u8>) {
        let index = self.participant_index();
        self.labels
            .iter()
            .map(|l| {
                let g = index[l.participant_id.as_str()].profile.is_privileged(attr);
                (l.label, u8::from(g))
            })
            .unzip()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Cohort> {
        let c: Cohort = serde_json::from_str(s)?;
        if c.schema_version != COHORT_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported cohort schema version {}",
                c.schema_version
            )));
        }
        Ok(c)
    }
}

/// Two assessments in the same civil year.
fn has_two_in_one_year(sorted: &[PainAssessment]) -> bool {
    sorted.windows(2).any(|w| w[0].date.year() == w[1].date.year())
}

/// Model input row with its outcome, group memberships and instance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub participant_id: String,
    pub date: NaiveDate,
    pub input: Vec<f64>,
    pub label: u8,
    pub groups: GroupFlags,
    pub weight: f64,
}
