use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{aod, disparate_impact, eod, spd, theil, GroupedOutcomes};
use crate::{Error, Result};

/// Absolute slack applied at the edges of every fair range so that values
/// landing on a boundary up to rounding are judged fair.
pub const FAIR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Spd,
    Di,
    Eod,
    Aod,
    Theil,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Spd, Metric::Di, Metric::Eod, Metric::Aod, Metric::Theil];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Spd => "spd",
            Metric::Di => "di",
            Metric::Eod => "eod",
            Metric::Aod => "aod",
            Metric::Theil => "theil",
        }
    }

    /// Closed fair interval.
    pub fn fair_range(self) -> (f64, f64) {
        match self {
            Metric::Spd | Metric::Eod | Metric::Aod => (-0.1, 0.1),
            Metric::Di => (0.8, 1.25),
            Metric::Theil => (0.0, 0.1),
        }
    }

    /// Value with no disparity.
    pub fn ideal(self) -> f64 {
        match self {
            Metric::Di => 1.0,
            _ => 0.0,
        }
    }

    pub fn verdict(self, value: f64) -> Verdict {
        if value.is_nan() {
            return Verdict::Undefined;
        }
        let (lo, hi) = self.fair_range();
        if value >= lo - FAIR_SLACK && value <= hi + FAIR_SLACK {
            return Verdict::Fair;
        }
        match self {
            Metric::Theil => Verdict::Unfair,
            _ if value < lo => Verdict::FavorsPrivileged,
            _ => Verdict::FavorsUnprivileged,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fair,
    FavorsPrivileged,
    FavorsUnprivileged,
    /// Outside the fair range of a metric without a direction (Theil).
    Unfair,
    Undefined,
}

impl Verdict {
    pub fn is_fair(self) -> bool {
        self == Verdict::Fair
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricVerdicts {
    pub spd: Verdict,
    pub di: Verdict,
    pub eod: Verdict,
    pub aod: Verdict,
    pub theil: Verdict,
}

/// Metric value as JSON: a number, `"inf"`/`"-inf"`, or `null` when undefined.
pub(crate) mod value_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if *x == f64::INFINITY => s.serialize_str("inf"),
            Some(x) if *x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            Some(x) => s.serialize_f64(*x),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) => match t.as_str() {
                "inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("bad metric value `{other}`"))),
            },
        }
    }
}

/// All five metrics with verdicts. Metrics that cannot be computed are `None`
/// with the reason in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
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
    pub verdicts: MetricVerdicts,
    pub fair_count: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: BTreeMap<Metric, String>,
}

impl FairnessReport {
    pub fn value(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Spd => self.spd,
            Metric::Di => self.di,
            Metric::Eod => self.eod,
            Metric::Aod => self.aod,
            Metric::Theil => self.theil,
        }
    }

    pub fn verdict(&self, m: Metric) -> Verdict {
        match m {
            Metric::Spd => self.verdicts.spd,
            Metric::Di => self.verdicts.di,
            Metric::Eod => self.verdicts.eod,
            Metric::Aod => self.verdicts.aod,
            Metric::Theil => self.verdicts.theil,
        }
    }

    /// Builds a report from per-metric results.
    pub fn from_values(values: [Result<f64>; 5]) -> Self {
        let mut undefined = BTreeMap::new();
        let mut v = [None; 5];
        for (i, (m, r)) in Metric::ALL.into_iter().zip(values).enumerate() {
            match r {
                Ok(x) => v[i] = Some(x),
                Err(e) => {
                    undefined.insert(m, e.to_string());
                }
            }
        }
        let verdict = |i: usize| v[i].map_or(Verdict::Undefined, |x| Metric::ALL[i].verdict(x));
        let verdicts = MetricVerdicts {
            spd: verdict(0),
            di: verdict(1),
            eod: verdict(2),
            aod: verdict(3),
            theil: verdict(4),
        };
        let fair_count = (0..5).filter(|&i| verdict(i).is_fair()).count();
        FairnessReport {
            spd: v[0],
            di: v[1],
            eod: v[2],
            aod: v[3],
            theil: v[4],
            verdicts,
            fair_count,
            undefined,
        }
    }

    /// Checks that every verdict and the fair count follow from the values.
    pub fn check_integrity(&self) -> Result<()> {
        for m in Metric::ALL {
            let expected = self.value(m).map_or(Verdict::Undefined, |x| m.verdict(x));
            if self.verdict(m) != expected {
                return Err(Error::Integrity(format!(
                    "{m} verdict {:?} does not match value {:?}",
                    self.verdict(m),
                    self.value(m)
                )));
            }
        }
        let count = Metric::ALL.iter().filter(|&&m| self.verdict(m).is_fair()).count();
        if count != self.fair_count {
            return Err(Error::Integrity(format!("fair count {} but {count} fair verdicts", self.fair_count)));
        }
        Ok(())
    }
}

/// All five metrics on outcomes with labels. Theil ignores weights.
pub fn report(g: &GroupedOutcomes) -> Result<FairnessReport> {
    let labels = g.require_labels()?;
    Ok(FairnessReport::from_values([
        spd(g),
        disparate_impact(g),
        eod(g),
        aod(g),
        theil(g.predictions, labels),
    ]))
}
