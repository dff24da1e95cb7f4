//! Classical bias mitigators: reweighing and disparate impact repair before
//! training, reject option classification after it.
//!
//! Group value 1 marks the privileged group and label 1 the favorable
//! outcome, as in [`crate::fairness`].

mod dir;
mod reweigh;
mod roc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dir::{dir_repair, dir_repair_with, GroupMap, RepairPlan};
pub use reweigh::{reweigh, ReweighingTable};
pub use roc::{roc_adjust, RocConfig};

use crate::{Error, Result};

/// Mitigation applied in an experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    None,
    Reweighing,
    Dir,
    Roc,
}

impl Mitigation {
    pub const ALL: [Mitigation; 4] = [Mitigation::None, Mitigation::Reweighing, Mitigation::Dir, Mitigation::Roc];

    pub fn name(self) -> &'static str {
        match self {
            Mitigation::None => "none",
            Mitigation::Reweighing => "reweighing",
            Mitigation::Dir => "dir",
            Mitigation::Roc => "roc",
        }
    }
}

impl fmt::Display for Mitigation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mitigation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Mitigation::None),
            "reweighing" | "rw" => Ok(Mitigation::Reweighing),
            "dir" | "disparate_impact_remover" => Ok(Mitigation::Dir),
            "roc" | "reject_option" => Ok(Mitigation::Roc),
            _ => Err(Error::invalid(format!("unknown mitigation `{s}`"))),
        }
    }
}

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Shape {
            expected: format!("{a} {what}"),
            actual: b.to_string(),
        })
    }
}
