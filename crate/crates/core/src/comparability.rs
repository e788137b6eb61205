//! The comparability relation deciding whether a produced string counts as
//! the disputed work.
//!
//! Only two kinds ship. New kinds must stay reflexive; `check_reflexive` is
//! the hook case loading uses to enforce that.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparabilityRelation {
    #[default]
    Exact,
    /// Equal length and at most `max` differing byte positions.
    Hamming { max: u64 },
}

impl ComparabilityRelation {
    pub fn compare(&self, z: &[u8], y: &[u8]) -> bool {
        match *self {
            ComparabilityRelation::Exact => z == y,
            ComparabilityRelation::Hamming { max } => {
                z.len() == y.len() && z.iter().zip(y).filter(|(a, b)| a != b).count() as u64 <= max
            }
        }
    }

    /// Whether `partial`, a prefix of some future output, can still grow into
    /// something comparable to `y`. Output is append-only, so this is a sound
    /// pruning test for program search.
    pub fn prefix_viable(&self, partial: &[u8], y: &[u8]) -> bool {
        if partial.len() > y.len() {
            return false;
        }
        match *self {
            ComparabilityRelation::Exact => y.starts_with(partial),
            ComparabilityRelation::Hamming { max } => {
                partial.iter().zip(y).filter(|(a, b)| a != b).count() as u64 <= max
            }
        }
    }
}

/// Free function form of [`ComparabilityRelation::compare`].
pub fn compare(relation: &ComparabilityRelation, z: &[u8], y: &[u8]) -> bool {
    relation.compare(z, y)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReflexivityCheck {
    pub sample_len: usize,
    pub passed: bool,
}

pub fn check_reflexive<S: AsRef<[u8]>>(
    relation: &ComparabilityRelation,
    samples: &[S],
) -> Vec<ReflexivityCheck> {
    samples
        .iter()
        .map(|s| {
            let s = s.as_ref();
            ReflexivityCheck {
                sample_len: s.len(),
                passed: relation.compare(s, s),
            }
        })
        .collect()
}

impl fmt::Display for ComparabilityRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComparabilityRelation::Exact => f.write_str("exact"),
            ComparabilityRelation::Hamming { max } => write!(f, "hamming:{max}"),
        }
    }
}

impl FromStr for ComparabilityRelation {
    type Err = String;

    /// Parses `exact` or `hamming:N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "exact" => Ok(ComparabilityRelation::Exact),
            Some(("hamming", n)) => n
                .parse()
                .map(|max| ComparabilityRelation::Hamming { max })
                .map_err(|e| format!("bad hamming distance {n:?}: {e}")),
            _ => Err(format!(
                "unknown relation {s:?}, expected `exact` or `hamming:N`"
            )),
        }
    }
}
