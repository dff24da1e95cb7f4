//! Seeded synthetic cohorts.
//!
//! Each participant gets a demographic profile, a resting heart rate, a step
//! volume and a waking window. Assessments fall on even days of one civil
//! year; every assessment day and the day before it get a wearable record.
//!
//! Recovery between consecutive assessments is drawn with probability
//! `0.5 + 0.3 * sum_k s_k * (+1 privileged / -1 unprivileged)`, clamped to
//! `[0.05, 0.95]`, where `s_k` is the configured bias strength of attribute
//! `k`. With all strengths at 0 labels are independent of group membership.
//!
//! The waveform is a sinusoidal diurnal base plus seeded noise and is not
//! meant to be physiologically faithful. Steps follow a Poisson draw around a
//! half-sine activity profile over the waking window; heart rate is a resting
//! level plus a daily sinusoid, a step-driven term and Gaussian noise. Each
//! day also draws its own log activity level and heart-rate offset. On an
//! assessment day the activity level is scaled by `exp(±signal)` and heart
//! rate shifted by `∓6·signal` bpm according to the outcome, so the label is
//! recoverable from the signals with noise.

use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{
    Attribute, Channel, Cohort, DayRecord, Ethnicity, Gender, ImputePolicy, PainAssessment, Participant,
    ProtectedProfile, Race, MINUTES_PER_DAY,
};
use crate::{rng, Error, Result};

/// Bias strength per attribute, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasStrengths(pub [f64; 5]);

impl BiasStrengths {
    pub fn none() -> Self {
        BiasStrengths([0.0; 5])
    }

    pub fn single(attr: Attribute, strength: f64) -> Self {
        let mut b = [0.0; 5];
        b[attr.index()] = strength;
        BiasStrengths(b)
    }

    pub fn get(&self, attr: Attribute) -> f64 {
        self.0[attr.index()]
    }
}

impl fmt::Display for BiasStrengths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = Attribute::ALL
            .iter()
            .filter(|a| self.get(**a) != 0.0)
            .map(|a| format!("{a}={}", self.get(*a)))
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for BiasStrengths {
    type Err = Error;

    /// `none` or a comma-separated list like `gender=0.4,age=0.2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut out = BiasStrengths::none();
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(out);
        }
        for part in s.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("bias entry `{part}` is not name=value")))?;
            let attr: Attribute = name.parse()?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bias strength `{value}` is not a number")))?;
            out.0[attr.index()] = v;
        }
        Ok(out)
    }
}

impl Serialize for BiasStrengths {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        for a in Attribute::ALL {
            if self.get(a) != 0.0 {
                m.serialize_entry(a.name(), &self.get(a))?;
            }
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for BiasStrengths {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m: std::collections::BTreeMap<Attribute, f64> = Deserialize::deserialize(d)?;
        let mut out = BiasStrengths::none();
        for (a, v) in m {
            out.0[a.index()] = v;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Number of participants.
    pub size: usize,
    pub bias: BiasStrengths,
    pub seed: u64,
    pub min_assessments: usize,
    pub max_assessments: usize,
    /// Mean missing-minute fraction per channel and day; each day draws a
    /// single gap of up to `2 * missing_rate` (capped below the inclusion
    /// limit).
    pub missing_rate: f64,
    /// Log activity shift carried by the outcome on an assessment day.
    pub signal: f64,
    pub year: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size: 200,
            bias: BiasStrengths::none(),
            seed: 7,
            min_assessments: 2,
            max_assessments: 3,
            missing_rate: 0.02,
            signal: 0.3,
            year: 2021,
        }
    }
}

impl SynthConfig {
    pub fn new(size: usize, bias: BiasStrengths, seed: u64) -> Self {
        SynthConfig {
            size,
            bias,
            seed,
            ..SynthConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::invalid("synthetic cohort needs at least 2 participants"));
        }
        if let Some(a) = Attribute::ALL.iter().find(|a| !(0.0..=1.0).contains(&self.bias.get(**a))) {
            return Err(Error::invalid(format!("bias strength for {a} outside [0, 1]")));
        }
        if self.min_assessments < 2 || self.max_assessments < self.min_assessments || self.max_assessments > 90 {
            return Err(Error::invalid("assessment counts must satisfy 2 <= min <= max <= 90"));
        }
        if !(0.0..=0.25).contains(&self.missing_rate) {
            return Err(Error::invalid("missing_rate outside [0, 0.25]"));
        }
        Ok(())
    }
}

/// Probability that an assessment shows recovery under the configured bias.
pub(crate) fn recovery_probability(profile: &ProtectedProfile, bias: &BiasStrengths) -> f64 {
    let shift: f64 = Attribute::ALL
        .iter()
        .map(|&a| bias.get(a) * if profile.is_privileged(a) { 1.0 } else { -1.0 })
        .sum();
    (0.5 + 0.3 * shift).clamp(0.05, 0.95)
}

struct Physiology {
    rest_hr: f64,
    step_peak: f64,
    wake: f64,
    sleep: f64,
}

fn draw_profile(r: &mut rng::Rng) -> ProtectedProfile {
    let gender = if r.random_bool(0.5) { Gender::Male } else { Gender::Female };
    let race = match r.random_range(0..20) {
        0..=7 => Race::Asian,
        8..=13 => Race::White,
        14..=17 => Race::Black,
        _ => Race::Other,
    };
    let ethnicity = if r.random_bool(0.6) {
        Ethnicity::NotHispanicOrLatino
    } else {
        Ethnicity::HispanicOrLatino
    };
    ProtectedProfile {
        gender,
        race,
        ethnicity,
        age: r.random_range(25..90),
        dementia: r.random_bool(0.3),
    }
}

fn draw_physiology(r: &mut rng::Rng, profile: &ProtectedProfile) -> Physiology {
    let n = Normal::new(0.0, 1.0).unwrap();
    Physiology {
        rest_hr: 64.0 + 0.08 * (profile.age as f64 - 50.0) + 5.0 * n.sample(r),
        step_peak: LogNormal::new(2.2, 0.3).unwrap().sample(r),
        wake: r.random_range(360.0..480.0),
        sleep: r.random_range(1320.0..1410.0),
    }
}

/// Day-to-day spread of the log activity level.
const DAY_ACTIVITY_SD: f64 = 0.25;
/// Day-to-day spread of the heart-rate level, bpm.
const DAY_HR_SD: f64 = 3.0;

/// `state`: `Some(1)` recovered assessment day, `Some(0)` not recovered,
/// `None` a neutral day.
fn draw_day(r: &mut rng::Rng, phys: &Physiology, state: Option<u8>, cfg: &SynthConfig) -> (Channel, Channel) {
    let n = Normal::new(0.0, 1.0).unwrap();
    let s = match state {
        Some(1) => 1.0,
        Some(_) => -1.0,
        None => 0.0,
    };
    let activity = (cfg.signal * s + DAY_ACTIVITY_SD * n.sample(r)).exp();
    let hr_shift = -6.0 * cfg.signal * s + DAY_HR_SD * n.sample(r);
    let mut hr = Vec::with_capacity(MINUTES_PER_DAY);
    let mut steps = Vec::with_capacity(MINUTES_PER_DAY);
    for t in 0..MINUTES_PER_DAY {
        let tf = t as f64;
        let intensity = if tf >= phys.wake && tf < phys.sleep {
            (std::f64::consts::PI * (tf - phys.wake) / (phys.sleep - phys.wake)).sin()
        } else {
            0.0
        };
        let rate = phys.step_peak * activity * intensity * (0.6 * n.sample(r)).exp();
        let st = if rate > 1e-9 {
            Poisson::new(rate).map(|p| p.sample(r)).unwrap_or(0.0)
        } else {
            0.0
        };
        let diurnal = 5.0 * (2.0 * std::f64::consts::PI * (tf - 360.0) / MINUTES_PER_DAY as f64).sin();
        let h = phys.rest_hr + hr_shift + diurnal + 0.6 * st + 2.5 * n.sample(r);
        hr.push(h.clamp(35.0, 200.0));
        steps.push(st);
    }
    (with_gap(r, hr, cfg.missing_rate), with_gap(r, steps, cfg.missing_rate))
}

fn with_gap(r: &mut rng::Rng, values: Vec<f64>, rate: f64) -> Channel {
    let mut ch = Channel::complete(values);
    if rate <= 0.0 {
        return ch;
    }
    let frac = r.random_range(0.0..(2.0 * rate).min(0.09));
    let len = (frac * MINUTES_PER_DAY as f64).round() as usize;
    if len == 0 {
        return ch;
    }
    let start = r.random_range(0..=MINUTES_PER_DAY - len);
    for i in start..start + len {
        ch.values[i] = f64::NAN;
        ch.missing[i] = true;
    }
    ch
}

/// Generates a cohort; identical configs give identical cohorts.
pub fn synthesize_cohort(cfg: &SynthConfig) -> Result<Cohort> {
    cfg.validate()?;
    let mut r = rng::seeded(cfg.seed);
    let jan1 = NaiveDate::from_ymd_opt(cfg.year, 1, 1).ok_or_else(|| Error::invalid("bad year"))?;
    let mut participants = Vec::with_capacity(cfg.size);
    let mut days = Vec::new();
    let mut assessments = Vec::new();
    for i in 0..cfg.size {
        let id = format!("P{:05}", i + 1);
        let profile = draw_profile(&mut r);
        let phys = draw_physiology(&mut r, &profile);
        let p_recover = recovery_probability(&profile, &cfg.bias);

        let k = r.random_range(cfg.min_assessments..=cfg.max_assessments);
        let mut slots: Vec<usize> = sample(&mut r, 180, k).into_vec();
        slots.sort_unstable();
        let mut vas: u8 = r.random_range(6..=9);
        let mut states: Vec<(NaiveDate, Option<u8>)> = Vec::new();
        for (j, slot) in slots.iter().enumerate() {
            let date = jan1 + Days::new(2 * *slot as u64 + 2);
            let state = if j == 0 {
                None
            } else {
                let recovered = vas >= 1 && r.random_bool(p_recover);
                if recovered {
                    vas -= r.random_range(1..=vas.min(2));
                } else {
                    vas = (vas + r.random_range(0..=2)).min(10);
                }
                Some(u8::from(recovered))
            };
            assessments.push(PainAssessment {
                participant_id: id.clone(),
                date,
                vas_score: vas,
            });
            states.push((date, state));
        }
        let mut needed: Vec<(NaiveDate, Option<u8>)> = Vec::new();
        for &(date, state) in &states {
            needed.push((date - Days::new(1), None));
            needed.push((date, state));
        }
        // Assessment days win over neutral "day before" entries on the same date.
        needed.sort_by_key(|(d, s)| (*d, s.is_none()));
        needed.dedup_by_key(|(d, _)| *d);
        for (date, state) in needed {
            let (heart_rate, steps) = draw_day(&mut r, &phys, state, cfg);
            days.push(DayRecord {
                participant_id: id.clone(),
                date,
                heart_rate,
                steps,
            });
        }
        participants.push(Participant { id, profile });
    }
    Cohort::assemble(participants, days, assessments, ImputePolicy::Linear, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_parsing_and_display() {
        let b: BiasStrengths = "gender=0.4, age=0.25".parse().unwrap();
        assert_eq!(b.get(Attribute::Gender), 0.4);
        assert_eq!(b.get(Attribute::Age), 0.25);
        assert_eq!(b.to_string(), "gender=0.4,age=0.25");
        assert_eq!("none".parse::<BiasStrengths>().unwrap(), BiasStrengths::none());
        assert!("height=0.3".parse::<BiasStrengths>().is_err());
        assert!("gender".parse::<BiasStrengths>().is_err());
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<BiasStrengths>(&json).unwrap(), b);
    }

    #[test]
    fn config_validation() {
        assert!(synthesize_cohort(&SynthConfig::new(1, BiasStrengths::none(), 1)).is_err());
        let bad = SynthConfig::new(10, BiasStrengths::single(Attribute::Race, 1.5), 1);
        assert!(synthesize_cohort(&bad).is_err());
    }

    #[test]
    fn recovery_probability_extremes() {
        let p = ProtectedProfile {
            gender: Gender::Male,
            race: Race::Asian,
            ethnicity: Ethnicity::NotHispanicOrLatino,
            age: 30,
            dementia: false,
        };
        assert_eq!(recovery_probability(&p, &BiasStrengths::none()), 0.5);
        assert_eq!(recovery_probability(&p, &BiasStrengths([1.0; 5])), 0.95);
        let g = BiasStrengths::single(Attribute::Gender, 0.4);
        assert!((recovery_probability(&p, &g) - 0.62).abs() < 1e-12);
    }

    #[test]
    fn small_cohort_is_well_formed() {
        let c = synthesize_cohort(&SynthConfig::new(6, BiasStrengths::none(), 3)).unwrap();
        assert_eq!(c.participants.len(), 6);
        assert!(c.rejections.is_empty(), "{:?}", c.rejections);
        for d in &c.days {
            assert!(d.heart_rate.is_filled() && d.steps.is_filled());
            assert!(d.validate().is_ok());
        }
        let idx = c.day_index();
        for l in &c.labels {
            assert!(idx.contains_key(&(l.participant_id.as_str(), l.date)));
            assert!(idx.contains_key(&(l.participant_id.as_str(), l.date - Days::new(1))));
        }
    }
}
