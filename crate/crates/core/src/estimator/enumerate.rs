//! Levin-style search for the cheapest program producing a target.
//!
//! Phases run over total cost `c = 8, 9, ..., budget`. In phase `c` every
//! program of length `L` (with `8L <= c`) gets `2^(c - 8L)` steps of fuel,
//! so a program found in phase `c` costs at most `c`. The first phase that
//! finds anything therefore yields the exact minimum, and every cheaper
//! program has been ruled out.
//!
//! Programs are not materialised one by one. Execution only ever depends on
//! code bytes the machine actually fetches, so the search runs *partial*
//! programs and branches over the 256 values of a byte only when the machine
//! first fetches it. A run that halts without fetching some position stands
//! for every completion of that position; its shortlex-least member fills
//! the position with zero.
//!
//! Branches that can never succeed are cut: invalid opcodes, opcodes that
//! would underflow the stack, unmounted tape ids, jump targets past the end,
//! outputs that are no longer a viable prefix of the target and runs without
//! enough fuel left to emit the rest of the target and halt.

use rayon::prelude::*;

use crate::comparability::ComparabilityRelation;
use crate::cost::ceil_log2;
use crate::vm::{CodeView, Fetch, Machine, Opcode, Program, Step, TapeEnvironment};

use super::EstimateError;

/// Longest program length the search will consider.
pub const MAX_SEARCH_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PartialCode {
    bytes: [u8; MAX_SEARCH_LEN],
    known: u32,
    len: usize,
}

impl PartialCode {
    fn new(len: usize) -> Self {
        PartialCode {
            bytes: [0; MAX_SEARCH_LEN],
            known: 0,
            len,
        }
    }

    fn with(mut self, pos: usize, byte: u8) -> Self {
        self.bytes[pos] = byte;
        self.known |= 1 << pos;
        self
    }

    /// The shortlex-least concrete program in this class.
    fn least(&self) -> Vec<u8> {
        self.bytes[..self.len].to_vec()
    }
}

impl CodeView for PartialCode {
    #[inline]
    fn fetch(&self, pos: usize) -> Fetch {
        if pos >= self.len {
            Fetch::End
        } else if self.known & (1 << pos) != 0 {
            Fetch::Byte(self.bytes[pos])
        } else {
            Fetch::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Found {
    pub cost: u64,
    pub bytes: Vec<u8>,
    pub steps: u64,
}

impl Found {
    fn key(&self) -> (u64, usize, &[u8]) {
        (self.cost, self.bytes.len(), &self.bytes)
    }

    fn better(a: Option<Found>, b: Option<Found>) -> Option<Found> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.key() < a.key() { b } else { a }),
            (a, b) => a.or(b),
        }
    }
}

struct Phase<'a> {
    target: &'a [u8],
    relation: &'a ComparabilityRelation,
    env: &'a TapeEnvironment,
    len: usize,
    fuel: u64,
}

/// Stack cells an opcode pops before it can do anything useful.
fn stack_need(op: Opcode) -> usize {
    match op {
        Opcode::Store => 3,
        Opcode::Swap | Opcode::Add | Opcode::Sub | Opcode::Read | Opcode::Load => 2,
        Opcode::Pop | Opcode::Dup | Opcode::Inc | Opcode::Jz | Opcode::Out => 1,
        _ => 0,
    }
}

impl Phase<'_> {
    /// Values of code byte `pos` worth exploring from machine state `m`.
    fn candidates(&self, m: &Machine, code: &PartialCode, pos: usize) -> Vec<u8> {
        let pc = m.pc();
        if pos == pc {
            let depth = m.stack_depth();
            return Opcode::ALL
                .iter()
                .filter(|&&op| stack_need(op) <= depth)
                .map(|&op| op as u8)
                .collect();
        }
        let op = Opcode::from_byte(code.bytes[pc]).expect("opcode fetched before operands");
        match op {
            Opcode::Push => (0..=255).collect(),
            Opcode::Read | Opcode::Len => (0..self.env.len().min(256)).map(|t| t as u8).collect(),
            Opcode::Jmp | Opcode::Jz => {
                let last = self.len - 1;
                if pos == pc + 1 {
                    (0..=(last >> 8) as u8).collect()
                } else {
                    let hi = (code.bytes[pc + 1] as usize) << 8;
                    (0..=255u8).filter(|&lo| hi | lo as usize <= last).collect()
                }
            }
            _ => unreachable!("{op:?} has no operands"),
        }
    }

    fn explore(&self, mut m: Machine, code: PartialCode) -> Option<Found> {
        loop {
            let remaining = self.target.len().saturating_sub(m.output.len()) as u64;
            if m.steps + remaining + 1 > self.fuel {
                return None;
            }
            let out_before = m.output.len();
            match m.step(&code, self.env) {
                Step::Continue => {
                    if m.output.len() != out_before
                        && !self.relation.prefix_viable(&m.output, self.target)
                    {
                        return None;
                    }
                }
                Step::Halted => {
                    if !self.relation.compare(&m.output, self.target) {
                        return None;
                    }
                    let cost = 8 * self.len as u64 + ceil_log2(m.steps) as u64;
                    return Some(Found {
                        cost,
                        bytes: code.least(),
                        steps: m.steps,
                    });
                }
                Step::Trap(_) => return None,
                Step::NeedByte(pos) => {
                    return self
                        .candidates(&m, &code, pos)
                        .into_iter()
                        .map(|b| self.explore(m.clone(), code.with(pos, b)))
                        .fold(None, Found::better);
                }
            }
        }
    }

    fn run(&self, parallel: bool) -> Option<Found> {
        let root = Machine::new();
        let code = PartialCode::new(self.len);
        let firsts = self.candidates(&root, &code, 0);
        if parallel {
            firsts
                .into_par_iter()
                .map(|b| self.explore(root.clone(), code.with(0, b)))
                .reduce(|| None, Found::better)
        } else {
            firsts
                .into_iter()
                .map(|b| self.explore(root.clone(), code.with(0, b)))
                .fold(None, Found::better)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Split each phase over the first code byte on the rayon pool. The
    /// merge uses the same total order as the serial search, so results are
    /// identical either way.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { parallel: true }
    }
}

/// Returns the cheapest program (cost, then length, then bytes) producing
/// something comparable to `target`, provided its cost is within
/// `budget_bits`.
pub(crate) fn search(
    target: &[u8],
    relation: &ComparabilityRelation,
    env: &TapeEnvironment,
    budget_bits: u64,
    options: SearchOptions,
) -> Result<(Program, Found), EstimateError> {
    if budget_bits < 8 {
        return Err(EstimateError::BudgetTooSmall { budget_bits });
    }
    for phase_bits in 8..=budget_bits {
        let max_len = ((phase_bits / 8) as usize).min(MAX_SEARCH_LEN);
        let mut best = None;
        for len in 1..=max_len {
            let exponent = phase_bits - 8 * len as u64;
            let fuel = if exponent >= 63 {
                u64::MAX
            } else {
                1u64 << exponent
            };
            let phase = Phase {
                target,
                relation,
                env,
                len,
                fuel,
            };
            best = Found::better(best, phase.run(options.parallel));
        }
        if let Some(found) = best {
            let program = Program::decode(found.bytes.clone()).expect("search lengths start at 1");
            return Ok((program, found));
        }
    }
    Err(EstimateError::NoWitnessWithinBudget { budget_bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::levin_cost;

    const EXACT: ComparabilityRelation = ComparabilityRelation::Exact;

    fn find(
        target: &[u8],
        env: &TapeEnvironment,
        budget: u64,
    ) -> Result<(Program, Found), EstimateError> {
        search(
            target,
            &EXACT,
            env,
            budget,
            SearchOptions { parallel: false },
        )
    }

    #[test]
    fn empty_target_is_a_single_halt() {
        let (p, f) = find(b"", &TapeEnvironment::empty(), 16).unwrap();
        assert_eq!(p.bytes(), &[0x00]);
        assert_eq!(f.cost, 8);
    }

    #[test]
    fn single_byte_is_push_out_halt() {
        let (p, f) = find(b"A", &TapeEnvironment::empty(), 40).unwrap();
        assert_eq!(p.bytes(), &[0x01, 0x41, 0x0C, 0x00]);
        assert_eq!(f.cost, 34);
    }

    #[test]
    fn two_bytes_from_tape_length() {
        let env = TapeEnvironment::new([vec![7u8; 0x0102]]).unwrap();
        let (p, f) = find(&[0x02, 0x01], &env, 48).unwrap();
        assert_eq!(p.bytes(), &[0x0B, 0x00, 0x0C, 0x0C, 0x00]);
        assert_eq!(f.cost, 42);
    }

    #[test]
    fn budget_too_small() {
        assert_eq!(
            find(b"", &TapeEnvironment::empty(), 7).unwrap_err(),
            EstimateError::BudgetTooSmall { budget_bits: 7 }
        );
        assert_eq!(
            find(b"A", &TapeEnvironment::empty(), 33).unwrap_err(),
            EstimateError::NoWitnessWithinBudget { budget_bits: 33 }
        );
    }

    #[test]
    fn witness_reverifies() {
        let env = TapeEnvironment::new([b"xyz".as_slice()]).unwrap();
        for target in [&b""[..], b"\x03", b"\x03\x00", b"z"] {
            if let Ok((p, f)) = find(target, &env, 48) {
                let r = levin_cost(&p, target, &EXACT, &env, 1 << 20);
                assert_eq!(r.cost_bits.finite(), Some(f.cost), "{target:?}");
                assert_eq!(r.halt_steps, f.steps);
            }
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let env = TapeEnvironment::new([b"ab".as_slice()]).unwrap();
        for target in [&b"\x02"[..], b"\x02\x00", b"Q"] {
            let a = search(target, &EXACT, &env, 44, SearchOptions { parallel: false });
            let b = search(target, &EXACT, &env, 44, SearchOptions { parallel: true });
            assert_eq!(a, b);
        }
    }
}
