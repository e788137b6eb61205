//! Brute-force preimage search programs: the shortcut a hash digest in the
//! context seems to offer, priced honestly.

use crate::asm::Assembler;
use crate::comparability::ComparabilityRelation;
use crate::cost::levin_cost;
use crate::vm::{Program, TapeEnvironment};

use super::{BoundKind, BoundReport};

pub const MIX8_INIT: u8 = 0x5A;

/// One round of the 8-bit mixing function.
pub fn mix8_step(h: u8, b: u8) -> u8 {
    h.wrapping_add(b).wrapping_mul(5).wrapping_add(0x3B)
}

/// 8-bit digest: `h = 0x5A`, then `h = 5 * (h + b) + 0x3B (mod 256)` per byte.
pub fn mix8(data: &[u8]) -> u8 {
    data.iter().fold(MIX8_INIT, |h, &b| mix8_step(h, b))
}

const S_HI: u8 = 0xE0;
const S_LO: u8 = 0xE1;
const RANK: u8 = 0xE2;

fn mix(a: &mut Assembler) {
    a.add()
        .dup()
        .dup()
        .dup()
        .dup()
        .add()
        .add()
        .add()
        .add()
        .push(0x3B)
        .add();
}

/// Program that hard-codes `prefix`, tries every `suffix_len`-byte suffix
/// (1 or 2) in lexicographic order and prints `prefix ‖ suffix` for the
/// `rank`-th suffix whose digest matches the byte at `digest_offset` of
/// tape `digest_tape`.
pub fn search_program(
    prefix: &[u8],
    suffix_len: usize,
    rank: u8,
    digest_tape: u8,
    digest_offset: u16,
) -> Program {
    assert!(
        (1..=2).contains(&suffix_len),
        "suffix length must be 1 or 2"
    );
    let mut a = Assembler::new();
    let (top, advance, hit, emit) = (a.label(), a.label(), a.label(), a.label());
    if rank > 0 {
        a.push(rank).store_var(RANK);
    }
    a.bind(top).push(mix8(prefix));
    if suffix_len == 2 {
        a.load_var(S_HI);
        mix(&mut a);
    }
    a.load_var(S_LO);
    mix(&mut a);
    let [hi, lo] = digest_offset.to_be_bytes();
    a.push(hi).push(lo).read(digest_tape).sub().jz(hit);

    a.bind(advance);
    if suffix_len == 2 {
        let carry = a.label();
        a.load_var(S_LO)
            .inc()
            .dup()
            .store_var(S_LO)
            .jz(carry)
            .jmp(top);
        a.bind(carry).load_var(S_HI).inc().store_var(S_HI).jmp(top);
    } else {
        a.load_var(S_LO).inc().store_var(S_LO).jmp(top);
    }

    a.bind(hit).load_var(RANK).dup().jz(emit);
    a.push(1).sub().store_var(RANK).jmp(advance);

    a.bind(emit).pop();
    for &b in prefix {
        a.push(b).out();
    }
    if suffix_len == 2 {
        a.load_var(S_HI).out();
    }
    a.load_var(S_LO).out().halt();
    a.finish().expect("search program labels are bound")
}

/// Cheapest search program for `x` with its digest at the given location,
/// over suffix lengths 1 and 2. `None` if `x` is too short, the digest does
/// not match or the rank does not fit a byte.
pub fn preimage_search_bound(
    x: &[u8],
    env: &TapeEnvironment,
    digest_tape: u8,
    digest_offset: u16,
) -> Option<BoundReport> {
    let digest = *env.tape(digest_tape)?.get(digest_offset as usize)?;
    let mut best: Option<BoundReport> = None;
    for k in 1..=2usize.min(x.len()) {
        let (prefix, suffix) = x.split_at(x.len() - k);
        let h = mix8(prefix);
        let target = suffix.iter().fold(0u32, |v, &b| v << 8 | b as u32);
        let rank = (0..target)
            .filter(|&s| {
                let bytes = s.to_be_bytes();
                mix8_tail(h, &bytes[4 - k..]) == digest
            })
            .count();
        if mix8_tail(h, suffix) != digest || rank > u8::MAX as usize {
            continue;
        }
        let program = search_program(prefix, k, rank as u8, digest_tape, digest_offset);
        let report = levin_cost(&program, x, &ComparabilityRelation::Exact, env, u64::MAX);
        let Some(value_bits) = report.cost_bits.finite() else {
            continue;
        };
        if best.as_ref().is_none_or(|b| value_bits < b.value_bits) {
            best = Some(BoundReport {
                kind: BoundKind::UpperBound,
                value_bits,
                witness_program: program,
                witness_steps: report.halt_steps,
                budget_bits: value_bits,
                exhaustive: false,
            });
        }
    }
    best
}

fn mix8_tail(h: u8, tail: &[u8]) -> u8 {
    tail.iter().fold(h, |h, &b| mix8_step(h, b))
}
