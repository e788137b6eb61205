//! Bounds on the optimal conditional cost: exact by exhaustive search on
//! tiny instances, upper bounds by compression elsewhere.

mod compress;
mod enumerate;
mod preimage;

pub use compress::{
    compress, compress_to_program, decode_bits, decoder_program, encode_bits, encode_stream,
    expand, Compressed, Token, TokenError, MAX_COPY_LEN, MAX_HISTORY_LEN, MAX_LITERAL_LEN,
    MAX_TOKEN_TAPE, MIN_MATCH,
};
pub use enumerate::{SearchOptions, MAX_SEARCH_LEN};
pub use preimage::{mix8, mix8_step, preimage_search_bound, search_program, MIX8_INIT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparability::ComparabilityRelation;
use crate::cost::levin_cost;
use crate::dersim::{build_env, Background};
use crate::vm::{EnvError, Program, TapeEnvironment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("no program within {budget_bits} bits produces the target")]
    NoWitnessWithinBudget { budget_bits: u64 },
    #[error("budget of {budget_bits} bits is below the 8-bit minimum")]
    BudgetTooSmall { budget_bits: u64 },
    #[error(transparent)]
    Environment(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    ExactWithinBudget,
    UpperBound,
}

/// A cost bound together with the program that attains it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value_bits: u64,
    pub witness_program: Program,
    pub witness_steps: u64,
    pub budget_bits: u64,
    /// Every cheaper program was ruled out.
    pub exhaustive: bool,
}

impl BoundReport {
    /// Re-runs the witness and checks it costs exactly `value_bits`.
    pub fn verify(
        &self,
        target: &[u8],
        relation: &ComparabilityRelation,
        env: &TapeEnvironment,
    ) -> bool {
        let fuel = 1u64.checked_shl(
            self.value_bits
                .saturating_sub(self.witness_program.bit_len()) as u32,
        );
        let report = levin_cost(
            &self.witness_program,
            target,
            relation,
            env,
            fuel.unwrap_or(u64::MAX),
        );
        report.cost_bits.finite() == Some(self.value_bits)
    }
}

/// Exact minimum cost of producing something comparable to `target`, or
/// [`EstimateError::NoWitnessWithinBudget`]. Ties go to the shortlex-least
/// program.
pub fn enumerate_min_cost(
    target: &[u8],
    relation: &ComparabilityRelation,
    env: &TapeEnvironment,
    budget_bits: u64,
) -> Result<BoundReport, EstimateError> {
    enumerate_min_cost_with(target, relation, env, budget_bits, SearchOptions::default())
}

pub fn enumerate_min_cost_with(
    target: &[u8],
    relation: &ComparabilityRelation,
    env: &TapeEnvironment,
    budget_bits: u64,
    options: SearchOptions,
) -> Result<BoundReport, EstimateError> {
    let (program, found) = enumerate::search(target, relation, env, budget_bits, options)?;
    Ok(BoundReport {
        kind: BoundKind::ExactWithinBudget,
        value_bits: found.cost,
        witness_program: program,
        witness_steps: found.steps,
        budget_bits,
        exhaustive: true,
    })
}

/// Compression upper bound as a [`BoundReport`].
pub fn compression_bound(y: &[u8], env: &TapeEnvironment) -> BoundReport {
    let c = compress(y, env);
    let value_bits = c
        .report
        .cost_bits
        .finite()
        .expect("compressed programs reproduce their target");
    BoundReport {
        kind: BoundKind::UpperBound,
        value_bits,
        witness_program: c.program,
        witness_steps: c.report.halt_steps,
        budget_bits: value_bits,
        exhaustive: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rigor {
    Exact,
    /// Difference of two upper bounds; its sign is not certified.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerSimMode {
    /// Exact when both searches succeed, compression bounds otherwise.
    #[default]
    Auto,
    ExactOnly,
    HeuristicOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerSimBounds {
    pub k_bg: BoundReport,
    pub k_bg_x: BoundReport,
    pub dersim_exact: Option<i64>,
    pub dersim_heuristic: Option<i64>,
    pub rigor: Rigor,
}

/// Bounds the gap between producing `y` from the background alone and from
/// the background plus `x` (mounted last).
pub fn theoretical_dersim(
    x: &[u8],
    y: &[u8],
    bg: &Background,
    relation: &ComparabilityRelation,
    budget_bits: u64,
    mode: DerSimMode,
) -> Result<DerSimBounds, EstimateError> {
    theoretical_dersim_with(
        x,
        y,
        bg,
        relation,
        budget_bits,
        mode,
        SearchOptions::default(),
    )
}

pub fn theoretical_dersim_with(
    x: &[u8],
    y: &[u8],
    bg: &Background,
    relation: &ComparabilityRelation,
    budget_bits: u64,
    mode: DerSimMode,
    options: SearchOptions,
) -> Result<DerSimBounds, EstimateError> {
    let env_bg = build_env(bg, false, x)?;
    let env_bg_x = build_env(bg, true, x)?;
    if mode != DerSimMode::HeuristicOnly {
        let search = |env| enumerate_min_cost_with(y, relation, env, budget_bits, options);
        let exact = search(&env_bg).and_then(|k_bg| Ok((k_bg, search(&env_bg_x)?)));
        match exact {
            Ok((k_bg, k_bg_x)) => {
                let d = k_bg.value_bits as i64 - k_bg_x.value_bits as i64;
                return Ok(DerSimBounds {
                    k_bg,
                    k_bg_x,
                    dersim_exact: Some(d),
                    dersim_heuristic: None,
                    rigor: Rigor::Exact,
                });
            }
            Err(e) if mode == DerSimMode::ExactOnly => return Err(e),
            Err(_) => {}
        }
    }
    let k_bg = compression_bound(y, &env_bg);
    let k_bg_x = compression_bound(y, &env_bg_x);
    let d = k_bg.value_bits as i64 - k_bg_x.value_bits as i64;
    Ok(DerSimBounds {
        k_bg,
        k_bg_x,
        dersim_exact: None,
        dersim_heuristic: Some(d),
        rigor: Rigor::Heuristic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: ComparabilityRelation = ComparabilityRelation::Exact;

    #[test]
    fn halt_is_the_cheapest_empty_program() {
        let b = enumerate_min_cost(b"", &EXACT, &TapeEnvironment::empty(), 16).unwrap();
        assert_eq!((b.value_bits, b.witness_program.bytes()), (8, &[0x00][..]));
        assert!(b.exhaustive);
        assert!(b.verify(b"", &EXACT, &TapeEnvironment::empty()));
    }

    #[test]
    fn random_64_bytes_have_no_cheap_witness() {
        let y: Vec<u8> = (0..64u32)
            .map(|i| (i.wrapping_mul(2654435761) >> 13) as u8)
            .collect();
        assert_eq!(
            enumerate_min_cost(&y, &EXACT, &TapeEnvironment::empty(), 40),
            Err(EstimateError::NoWitnessWithinBudget { budget_bits: 40 })
        );
    }

    #[test]
    fn exact_dersim_from_tape_length() {
        let bg = Background {
            noncopy_x: vec![],
            noncopy_y: vec![],
            context: vec![vec![1]],
        };
        let d =
            theoretical_dersim(&[7, 7], &[2, 0], &bg, &EXACT, 51, DerSimMode::ExactOnly).unwrap();
        assert_eq!(d.rigor, Rigor::Exact);
        assert_eq!(d.k_bg_x.value_bits, 42);
        assert_eq!(
            d.k_bg_x.witness_program.bytes(),
            &[0x0B, 0x01, 0x0C, 0x0C, 0x00]
        );
        assert_eq!(d.k_bg.value_bits, 51);
        assert_eq!(d.dersim_exact, Some(9));
    }

    #[test]
    fn unreachable_target_is_heuristic_in_auto_mode() {
        let bg = Background::default();
        let err =
            theoretical_dersim(b"AB", b"AB", &bg, &EXACT, 48, DerSimMode::ExactOnly).unwrap_err();
        assert_eq!(
            err,
            EstimateError::NoWitnessWithinBudget { budget_bits: 48 }
        );
        let d = theoretical_dersim(b"AB", b"AB", &bg, &EXACT, 48, DerSimMode::Auto).unwrap();
        assert_eq!(d.rigor, Rigor::Heuristic);
        assert!(d.dersim_exact.is_none());
        assert!(d
            .k_bg
            .verify(b"AB", &EXACT, &build_env(&bg, false, b"AB").unwrap()));
    }
}
