//! The adversarial empirical derivation similarity game.
//!
//! The plaintiff's producer runs with the background and the original work
//! `x` mounted; the defendant's reproducer runs with the background alone.
//! The reported gap is `cost(R) - cost(P)` in bits.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comparability::ComparabilityRelation;
use crate::cost::{levin_cost, Cost, CostReport};
use crate::estimator;
use crate::vm::{EnvError, Program, TapeEnvironment};

/// Material both parties agreed is not copyrightable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Background {
    pub noncopy_x: Vec<Vec<u8>>,
    pub noncopy_y: Vec<Vec<u8>>,
    pub context: Vec<Vec<u8>>,
}

impl Background {
    pub fn tape_count(&self) -> usize {
        self.noncopy_x.len() + self.noncopy_y.len() + self.context.len()
    }

    /// All background components in mount order.
    pub fn tapes(&self) -> impl Iterator<Item = &[u8]> {
        self.noncopy_x
            .iter()
            .chain(&self.noncopy_y)
            .chain(&self.context)
            .map(Vec::as_slice)
    }

    /// The id at which `x` is mounted for the plaintiff.
    pub fn x_tape_id(&self) -> usize {
        self.tape_count()
    }

    /// SHA-256 over a canonical encoding: for each of `noncopy_x`,
    /// `noncopy_y`, `context` a big-endian u32 item count, then every item as
    /// a big-endian u32 length followed by its bytes.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for list in [&self.noncopy_x, &self.noncopy_y, &self.context] {
            h.update((list.len() as u32).to_be_bytes());
            for item in list {
                h.update((item.len() as u32).to_be_bytes());
                h.update(item);
            }
        }
        h.finalize().into()
    }
}

/// Mounts the background in the fixed order noncopy(x), noncopy(y), context
/// and, when `include_x`, the original work at the single highest id. A
/// program that only touches background tapes therefore behaves identically
/// in both environments.
pub fn build_env(bg: &Background, include_x: bool, x: &[u8]) -> Result<TapeEnvironment, EnvError> {
    let mut env = TapeEnvironment::new(bg.tapes())?;
    if include_x {
        env.mount(x)?;
    }
    Ok(env)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Plaintiff,
    Defendant,
}

impl Role {
    /// Domain-separation byte used in commitments.
    pub fn tag(self) -> u8 {
        match self {
            Role::Plaintiff => 0x01,
            Role::Defendant => 0x02,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Plaintiff => "plaintiff",
            Role::Defendant => "defendant",
        })
    }
}

/// Clamped `dersim / k_upper`, kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Normalized {
    pub num: u64,
    pub den: u64,
}

impl Normalized {
    fn clamp(dersim: i64, k_upper: u64) -> Option<Normalized> {
        if k_upper == 0 {
            return None;
        }
        let num = dersim.clamp(0, k_upper as i64) as u64;
        Some(Normalized { num, den: k_upper })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KUpperSource {
    LiteralProgram,
    Compression,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerSimReport {
    pub plaintiff_cost: CostReport,
    pub defendant_cost: CostReport,
    /// `defendant - plaintiff`; absent when either side failed.
    pub dersim_bits: Option<i64>,
    pub failed: Vec<Role>,
    pub normalized: Option<Normalized>,
    /// Best known upper bound on the complexity of `y` given the background.
    pub k_upper_bits: u64,
    pub k_upper_source: KUpperSource,
}

/// Evaluates one round of the game.
#[allow(clippy::too_many_arguments)]
pub fn empirical_dersim(
    x: &[u8],
    y: &[u8],
    plaintiff: &Program,
    defendant: &Program,
    bg: &Background,
    relation: &ComparabilityRelation,
    fuel_cap: u64,
) -> Result<DerSimReport, EnvError> {
    let env_px = build_env(bg, true, x)?;
    let env_bg = build_env(bg, false, x)?;
    let plaintiff_cost = levin_cost(plaintiff, y, relation, &env_px, fuel_cap);
    let defendant_cost = levin_cost(defendant, y, relation, &env_bg, fuel_cap);
    let (k_upper_bits, k_upper_source) = k_upper(y, relation, &env_bg);
    Ok(assemble_report(
        plaintiff_cost,
        defendant_cost,
        k_upper_bits,
        k_upper_source,
    ))
}

pub(crate) fn assemble_report(
    plaintiff_cost: CostReport,
    defendant_cost: CostReport,
    k_upper_bits: u64,
    k_upper_source: KUpperSource,
) -> DerSimReport {
    let mut failed = Vec::new();
    if !plaintiff_cost.cost_bits.is_finite() {
        failed.push(Role::Plaintiff);
    }
    if !defendant_cost.cost_bits.is_finite() {
        failed.push(Role::Defendant);
    }
    let dersim_bits = match (plaintiff_cost.cost_bits, defendant_cost.cost_bits) {
        (Cost::Finite(p), Cost::Finite(r)) => Some(r as i64 - p as i64),
        _ => None,
    };
    let normalized = dersim_bits.and_then(|d| Normalized::clamp(d, k_upper_bits));
    DerSimReport {
        plaintiff_cost,
        defendant_cost,
        dersim_bits,
        failed,
        normalized,
        k_upper_bits,
        k_upper_source,
    }
}

/// Best of the hard-coding program and the compression bound, both measured
/// in the background-only environment.
pub fn k_upper(
    y: &[u8],
    relation: &ComparabilityRelation,
    env_bg: &TapeEnvironment,
) -> (u64, KUpperSource) {
    let literal = crate::cost::literal_program(y);
    let lit = levin_cost(&literal, y, relation, env_bg, u64::MAX)
        .cost_bits
        .finite()
        .expect("literal program reproduces its payload");
    let (_, compressed) = estimator::compress_to_program(y, env_bg);
    match compressed.cost_bits.finite() {
        Some(c) if c < lit => (c, KUpperSource::Compression),
        _ => (lit, KUpperSource::LiteralProgram),
    }
}

/// Default half-width of the negligible and near-total bands.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// `|dersim_bits|` at or below this is treated as "about zero" by fixtures.
pub const NEGLIGIBLE_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Band {
    Negligible,
    Partial,
    NearTotal,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Negligible => "negligible",
            Band::Partial => "partial",
            Band::NearTotal => "near-total",
        })
    }
}

/// Position on the similarity scale. Never an infringement ruling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub dersim_bits: Option<i64>,
    pub normalized: Option<Normalized>,
    pub band: Option<Band>,
    pub epsilon: f64,
    pub failed: Vec<Role>,
}

pub fn verdict(report: &DerSimReport, epsilon: f64) -> VerdictSummary {
    let band = report.normalized.map(|n| {
        let v = n.value();
        if v < epsilon {
            Band::Negligible
        } else if v > 1.0 - epsilon {
            Band::NearTotal
        } else {
            Band::Partial
        }
    });
    VerdictSummary {
        dersim_bits: report.dersim_bits,
        normalized: report.normalized,
        band,
        epsilon,
        failed: report.failed.clone(),
    }
}
