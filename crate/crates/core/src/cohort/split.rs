use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::Cohort;
use crate::{rng, Error, Result};

/// Shuffles `ids` under `seed` and cuts at `round(ratio * n)`.
pub fn split_ids(ids: &[String], ratio: f64, seed: u64) -> Result<(Vec<String>, Vec<String>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut rng::seeded(seed));
    let n_train = (ratio * shuffled.len() as f64).round() as usize;
    if n_train == 0 || n_train == shuffled.len() {
        return Err(Error::invalid(format!(
            "split of {} participants at ratio {ratio} leaves one side empty",
            shuffled.len()
        )));
    }
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}

/// Participant-level split: no participant's days land on both sides.
pub fn split(cohort: &Cohort, ratio: f64, seed: u64) -> Result<(Cohort, Cohort)> {
    let ids: Vec<String> = cohort.participants.iter().map(|p| p.id.clone()).collect();
    let (train, test) = split_ids(&ids, ratio, seed)?;
    let train: BTreeSet<String> = train.into_iter().collect();
    let test: BTreeSet<String> = test.into_iter().collect();
    Ok((cohort.subset(&train), cohort.subset(&test)))
}
