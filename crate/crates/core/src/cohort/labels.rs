use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::PainAssessment;

/// Recovery outcome attached to an assessment that has a predecessor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub participant_id: String,
    pub date: NaiveDate,
    /// 1 when the VAS score dropped relative to the previous assessment.
    pub label: u8,
}

/// Labels each assessment after the first: 1 if its score is lower than the
/// previous one, else 0. Input is sorted by date first, so any permutation of
/// the same assessments yields the same result.
pub fn derive_labels(assessments: &[PainAssessment]) -> Vec<(NaiveDate, u8)> {
    let mut sorted: Vec<&PainAssessment> = assessments.iter().collect();
    sorted.sort_by_key(|a| a.date);
    sorted
        .windows(2)
        .map(|w| (w[1].date, u8::from(w[1].vas_score < w[0].vas_score)))
        .collect()
}
