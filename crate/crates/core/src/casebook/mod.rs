//! Case bundles: the inputs of one dispute, on disk and in memory.
//!
//! A bundle is a directory:
//!
//! ```text
//! manifest.json
//! x.bin  y.bin
//! noncopy_x/000.bin ...  noncopy_y/...  context/...
//! programs/plaintiff.dvm  programs/defendant.dvm   (optional)
//! ```

mod bundle;
mod fixtures;
mod lint;

pub use bundle::{load_case, write_case, LoadError, Loaded, Manifest, ProgramFiles};
pub use fixtures::{builtin_case, builtin_cases, BUILTIN_NAMES};
pub use lint::{validate_case, Lint};

use serde::{Deserialize, Serialize};

use crate::comparability::ComparabilityRelation;
use crate::dersim::{verdict, Background, Band, DerSimReport, DEFAULT_EPSILON};
use crate::vm::Program;

/// What a fixture is expected to evaluate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub band: Band,
    /// For `negligible`, the largest allowed `|dersim_bits|`; for
    /// `near-total`, the smallest allowed `dersim_bits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_bits: Option<u64>,
}

impl Expected {
    pub fn holds(&self, report: &DerSimReport) -> bool {
        let Some(d) = report.dersim_bits else {
            return false;
        };
        let band_ok = verdict(report, DEFAULT_EPSILON).band == Some(self.band);
        let threshold_ok = match (self.band, self.threshold_bits) {
            (_, None) | (Band::Partial, _) => true,
            (Band::Negligible, Some(t)) => d.unsigned_abs() <= t,
            (Band::NearTotal, Some(t)) => d >= t as i64,
        };
        band_ok && threshold_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub name: String,
    pub seed: Option<u64>,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub bg: Background,
    pub relation: ComparabilityRelation,
    pub plaintiff_program: Option<Program>,
    pub defendant_program: Option<Program>,
    pub expected: Option<Expected>,
}

impl Case {
    /// An empty case with the given name.
    pub fn named(name: &str) -> Case {
        Case {
            name: name.to_string(),
            seed: None,
            x: Vec::new(),
            y: Vec::new(),
            bg: Background::default(),
            relation: ComparabilityRelation::Exact,
            plaintiff_program: None,
            defendant_program: None,
            expected: None,
        }
    }
}
