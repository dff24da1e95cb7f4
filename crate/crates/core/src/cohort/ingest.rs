//! CSV bundle reading and writing.
//!
//! A bundle is a directory with three files:
//!
//! | file | columns |
//! |------|---------|
//! | `participants.csv` | `participant_id, gender, race, ethnicity, age, dementia` |
//! | `days.csv` | `participant_id, date, minute_index, heart_rate, steps` |
//! | `assessments.csv` | `participant_id, date, vas_score` |
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). In `days.csv` a blank cell marks a
//! missing minute; minutes with no row at all are missing too.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;

use super::{
    parse_flag, Channel, Cohort, DayRecord, Ethnicity, Gender, PainAssessment, Participant, ProtectedProfile,
    Race, Rejection, MINUTES_PER_DAY,
};
use crate::features::EncodingPlan;
use crate::{Error, Result};

pub const PARTICIPANTS_FILE: &str = "participants.csv";
pub const DAYS_FILE: &str = "days.csv";
pub const ASSESSMENTS_FILE: &str = "assessments.csv";

type DaySlots = (Vec<Option<f64>>, Vec<Option<f64>>);

/// Reads a bundle, rejecting malformed rows individually, then applies the
/// inclusion rule and imputes with the plan's policy.
pub fn ingest_cohort(dir: &Path, plan: &EncodingPlan) -> Result<Cohort> {
    let mut rejections = Vec::new();
    let participants = read_participants(&dir.join(PARTICIPANTS_FILE), &mut rejections)?;
    let days = read_days(&dir.join(DAYS_FILE), &mut rejections)?;
    let assessments = read_assessments(&dir.join(ASSESSMENTS_FILE), &mut rejections)?;
    Cohort::assemble(participants, days, assessments, plan.impute, rejections)
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(f))
}

fn rows(path: &Path, expected: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let cols: Vec<usize> = expected
        .iter()
        .map(|name| {
            headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| {
                Error::invalid(format!("{} lacks column `{name}`", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        out.push((line, cols.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect()));
    }
    Ok(out)
}

fn scope(path: &Path, line: usize) -> String {
    format!(
        "{}:{line}",
        path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
    )
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

fn req<'a>(v: &'a str, name: &str) -> std::result::Result<&'a str, String> {
    if v.is_empty() {
        Err(format!("empty {name}"))
    } else {
        Ok(v)
    }
}

fn read_participants(path: &Path, rejections: &mut Vec<Rejection>) -> Result<Vec<Participant>> {
    let mut out = Vec::new();
    for (line, f) in rows(path, &["participant_id", "gender", "race", "ethnicity", "age", "dementia"])? {
        let parsed = (|| -> std::result::Result<Participant, String> {
            let id = req(&f[0], "participant_id")?.to_string();
            let profile = ProtectedProfile {
                gender: f[1].parse::<Gender>().map_err(|e| e.to_string())?,
                race: f[2].parse::<Race>().map_err(|e| e.to_string())?,
                ethnicity: f[3].parse::<Ethnicity>().map_err(|e| e.to_string())?,
                age: f[4].parse::<u32>().map_err(|e| format!("bad age `{}`: {e}", f[4]))?,
                dementia: parse_flag(&f[5]).map_err(|e| e.to_string())?,
            };
            Ok(Participant { id, profile })
        })();
        match parsed {
            Ok(p) => out.push(p),
            Err(reason) => rejections.push(Rejection::new(scope(path, line), reason)),
        }
    }
    Ok(out)
}

fn parse_reading(s: &str, name: &str, integer: bool) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad {name} `{s}`"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{name} `{s}` must be finite and non-negative"));
    }
    if integer && v.fract() != 0.0 {
        return Err(format!("{name} `{s}` must be an integer count"));
    }
    Ok(Some(v))
}

fn read_days(path: &Path, rejections: &mut Vec<Rejection>) -> Result<Vec<DayRecord>> {
    let mut slots: BTreeMap<(String, NaiveDate), DaySlots> = BTreeMap::new();
    for (line, f) in rows(path, &["participant_id", "date", "minute_index", "heart_rate", "steps"])? {
        let parsed = (|| -> std::result::Result<_, String> {
            let id = req(&f[0], "participant_id")?.to_string();
            let date = parse_date(&f[1])?;
            let minute: usize = f[2].parse().map_err(|_| format!("bad minute_index `{}`", f[2]))?;
            if minute >= MINUTES_PER_DAY {
                return Err(format!("minute_index {minute} outside 0-{}", MINUTES_PER_DAY - 1));
            }
            let hr = parse_reading(&f[3], "heart_rate", false)?;
            let st = parse_reading(&f[4], "steps", true)?;
            Ok((id, date, minute, hr, st))
        })();
        match parsed {
            Ok((id, date, minute, hr, st)) => {
                let entry = slots
                    .entry((id, date))
                    .or_insert_with(|| (vec![None; MINUTES_PER_DAY], vec![None; MINUTES_PER_DAY]));
                if entry.0[minute].is_some() || entry.1[minute].is_some() {
                    rejections.push(Rejection::new(scope(path, line), format!("duplicate minute {minute}")));
                    continue;
                }
                entry.0[minute] = hr;
                entry.1[minute] = st;
            }
            Err(reason) => rejections.push(Rejection::new(scope(path, line), reason)),
        }
    }
    Ok(slots
        .into_iter()
        .map(|((participant_id, date), (hr, st))| DayRecord {
            participant_id,
            date,
            heart_rate: Channel::from_options(&hr),
            steps: Channel::from_options(&st),
        })
        .collect())
}

fn read_assessments(path: &Path, rejections: &mut Vec<Rejection>) -> Result<Vec<PainAssessment>> {
    let mut out = Vec::new();
    for (line, f) in rows(path, &["participant_id", "date", "vas_score"])? {
        let parsed = (|| -> std::result::Result<PainAssessment, String> {
            let participant_id = req(&f[0], "participant_id")?.to_string();
            let date = parse_date(&f[1])?;
            let vas_score: u8 = f[2].parse().map_err(|_| format!("bad vas_score `{}`", f[2]))?;
            if vas_score > 10 {
                return Err(format!("vas_score {vas_score} outside 0-10"));
            }
            Ok(PainAssessment {
                participant_id,
                date,
                vas_score,
            })
        })();
        match parsed {
            Ok(a) => out.push(a),
            Err(reason) => rejections.push(Rejection::new(scope(path, line), reason)),
        }
    }
    Ok(out)
}

fn gender_str(g: Gender) -> &'static str {
    match g {
        Gender::Male => "male",
        Gender::Female => "female",
        Gender::Other => "other",
    }
}

fn race_str(r: Race) -> &'static str {
    match r {
        Race::Asian => "asian",
        Race::White => "white",
        Race::Black => "black",
        Race::Other => "other",
    }
}

fn ethnicity_str(e: Ethnicity) -> &'static str {
    match e {
        Ethnicity::NotHispanicOrLatino => "not_hispanic_or_latino",
        Ethnicity::HispanicOrLatino => "hispanic_or_latino",
        Ethnicity::Unknown => "unknown",
    }
}

fn fmt_reading(v: f64, missing: bool) -> String {
    if missing {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes `cohort` as a bundle. Imputed minutes are written back as blanks, so
/// re-ingesting a written bundle reproduces the cohort.
pub fn write_bundle(cohort: &Cohort, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let writer = |name: &str| -> Result<(csv::Writer<fs::File>, std::path::PathBuf)> {
        let p = dir.join(name);
        let f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        Ok((csv::Writer::from_writer(f), p))
    };

    let (mut w, p) = writer(PARTICIPANTS_FILE)?;
    w.write_record(["participant_id", "gender", "race", "ethnicity", "age", "dementia"])
        .map_err(|e| Error::csv(&p, e))?;
    for part in &cohort.participants {
        let pr = &part.profile;
        w.write_record([
            part.id.as_str(),
            gender_str(pr.gender),
            race_str(pr.race),
            ethnicity_str(pr.ethnicity),
            &pr.age.to_string(),
            if pr.dementia { "true" } else { "false" },
        ])
        .map_err(|e| Error::csv(&p, e))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    let (mut w, p) = writer(DAYS_FILE)?;
    w.write_record(["participant_id", "date", "minute_index", "heart_rate", "steps"])
        .map_err(|e| Error::csv(&p, e))?;
    for d in &cohort.days {
        let date = d.date.format("%Y-%m-%d").to_string();
        for m in 0..MINUTES_PER_DAY {
            w.write_record([
                d.participant_id.as_str(),
                &date,
                &m.to_string(),
                &fmt_reading(d.heart_rate.values[m], d.heart_rate.missing[m]),
                &fmt_reading(d.steps.values[m], d.steps.missing[m]),
            ])
            .map_err(|e| Error::csv(&p, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&p, e))?;

    let (mut w, p) = writer(ASSESSMENTS_FILE)?;
    w.write_record(["participant_id", "date", "vas_score"]).map_err(|e| Error::csv(&p, e))?;
    for a in &cohort.assessments {
        w.write_record([
            a.participant_id.as_str(),
            &a.date.format("%Y-%m-%d").to_string(),
            &a.vas_score.to_string(),
        ])
        .map_err(|e| Error::csv(&p, e))?;
    }
    w.flush().map_err(|e| Error::io(&p, e))?;
    Ok(())
}
