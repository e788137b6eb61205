//! Conditional Levin cost of a single program: `8·|M| + ⌈log2 t⌉` when the
//! program halts within fuel with an output comparable to the target,
//! infinite otherwise.
//!
//! The machine is deterministic and output is only defined at halt, so the
//! minimum over running times collapses to the one halting time.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::asm::Assembler;
use crate::comparability::ComparabilityRelation;
use crate::vm::{self, Program, Status, TapeEnvironment};

/// Default fuel cap used by the command line tools.
pub const DEFAULT_FUEL: u64 = 1 << 24;

/// A cost in bits, or infinity for programs that never produce a comparable
/// output. `Finite(_) < Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cost {
    Finite(u64),
    Infinite,
}

impl Cost {
    pub fn finite(self) -> Option<u64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(v) => s.serialize_u64(*v),
            Cost::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bits(u64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Bits(v) => Ok(Cost::Finite(v)),
            Repr::Word(w) if w == "inf" => Ok(Cost::Infinite),
            Repr::Word(w) => Err(serde::de::Error::custom(format!("bad cost {w:?}"))),
        }
    }
}

/// `⌈log2 t⌉`, with `t <= 1` mapping to 0.
pub fn ceil_log2(t: u64) -> u32 {
    if t <= 1 {
        0
    } else {
        64 - (t - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub cost_bits: Cost,
    pub program_bits: u64,
    pub log_time_bits: u32,
    pub halt_steps: u64,
    #[serde(flatten)]
    pub status: Status,
    /// Output at halt; absent when the program did not halt.
    #[serde(serialize_with = "ser_opt_hex")]
    pub output: Option<Vec<u8>>,
    pub comparable: bool,
}

fn ser_opt_hex<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(bytes) => s.serialize_str(&hex::encode(bytes)),
        None => s.serialize_none(),
    }
}

/// Runs `program` once and charges its conditional Levin cost against
/// `target`.
pub fn levin_cost(
    program: &Program,
    target: &[u8],
    relation: &ComparabilityRelation,
    env: &TapeEnvironment,
    fuel_cap: u64,
) -> CostReport {
    let result = vm::run(program, env, fuel_cap.max(1));
    let comparable = result
        .output
        .as_deref()
        .is_some_and(|z| relation.compare(z, target));
    let program_bits = program.bit_len();
    let log_time_bits = ceil_log2(result.steps);
    let cost_bits = if comparable {
        Cost::Finite(program_bits + log_time_bits as u64)
    } else {
        Cost::Infinite
    };
    CostReport {
        cost_bits,
        program_bits,
        log_time_bits,
        halt_steps: result.steps,
        status: result.status,
        output: result.output,
        comparable,
    }
}

/// Byte length of [`copy_program`].
pub const COPY_PROGRAM_LEN: usize = 62;

// RAM cells `v:v` holding the 16-bit read index.
const IDX_HI: u8 = 0x00;
const IDX_LO: u8 = 0x01;

/// Streams tape `tape_id` to output and halts.
///
/// ```text
/// loop:  LEN t; LOAD lo; SUB; JZ lo_eq; POP
/// body:  LOAD hi; LOAD lo; READ t; OUT
///        lo += 1; JZ carry; JMP loop
/// carry: hi += 1; JMP loop
/// lo_eq: LOAD hi; SUB; JZ done; JMP body
/// done:  HALT
/// ```
///
/// 62 bytes, and about 25 steps per copied byte.
pub fn copy_program(tape_id: u8) -> Program {
    let mut a = Assembler::new();
    let (top, body, carry, lo_eq, done) = (a.label(), a.label(), a.label(), a.label(), a.label());
    a.bind(top);
    a.len(tape_id).load_var(IDX_LO).sub().jz(lo_eq).pop();
    a.bind(body);
    a.load_var(IDX_HI).load_var(IDX_LO).read(tape_id).out();
    a.load_var(IDX_LO)
        .inc()
        .dup()
        .store_var(IDX_LO)
        .jz(carry)
        .jmp(top);
    a.bind(carry);
    a.load_var(IDX_HI).inc().store_var(IDX_HI).jmp(top);
    a.bind(lo_eq);
    a.load_var(IDX_HI).sub().jz(done).jmp(body);
    a.bind(done);
    a.halt();
    a.finish().expect("copy template assembles")
}

/// Payloads at most this long use the `PUSH b; OUT` form unconditionally.
const STACKED_LITERAL_MAX: usize = 30_000;

/// Hard-codes `payload`, picking the shorter of two encodings:
///
/// * direct: `PUSH b; OUT` per byte, then `HALT` (`3·n + 1` bytes);
/// * stacked: a 0 sentinel, then per chunk of at most 255 bytes the chunk
///   pushed in reverse followed by its length, then a 20-byte pop-and-emit
///   loop and `HALT` (`2·n + 2·chunks + 23` bytes).
///
/// Ties go to the direct form, so `literal_program(b"A")` is
/// `PUSH 'A'; OUT; HALT`.
pub fn literal_program(payload: &[u8]) -> Program {
    let direct_len = 3 * payload.len() + 1;
    let chunks = payload.len().div_ceil(255);
    let stacked_len = 2 * payload.len() + 2 * chunks + 23;
    if stacked_len < direct_len && payload.len() <= STACKED_LITERAL_MAX {
        return stacked_literal(payload);
    }
    let mut code = Vec::with_capacity(direct_len);
    for &b in payload {
        code.extend_from_slice(&[0x01, b, 0x0C]);
    }
    code.push(0x00);
    Program::decode(code).expect("non-empty")
}

fn stacked_literal(payload: &[u8]) -> Program {
    let mut a = Assembler::new();
    a.push(0);
    for chunk in payload.chunks(255).rev() {
        for &b in chunk.iter().rev() {
            a.push(b);
        }
        a.push(chunk.len() as u8);
    }
    let (top, chunk_end, done) = (a.label(), a.label(), a.label());
    a.bind(top);
    a.dup().jz(chunk_end).swap().out().push(1).sub().jmp(top);
    a.bind(chunk_end);
    a.pop().dup().jz(done).jmp(top);
    a.bind(done);
    a.halt();
    a.finish().expect("literal assembles")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: ComparabilityRelation = ComparabilityRelation::Exact;

    #[test]
    fn ceil_log2_table() {
        let expect = [
            (0, 0),
            (1, 0),
            (2, 1),
            (3, 2),
            (4, 2),
            (5, 3),
            (8, 3),
            (9, 4),
            (201, 8),
            (1 << 20, 20),
        ];
        for (t, l) in expect {
            assert_eq!(ceil_log2(t), l, "t={t}");
        }
        assert_eq!(ceil_log2(u64::MAX), 64);
    }

    #[test]
    fn halt_only_costs_eight_bits() {
        let r = levin_cost(
            &Program::decode(vec![0]).unwrap(),
            b"",
            &EXACT,
            &TapeEnvironment::empty(),
            10,
        );
        assert_eq!(r.cost_bits, Cost::Finite(8));
        assert_eq!(r.log_time_bits, 0);
        assert!(r.comparable);
    }

    #[test]
    fn push_out_halt_costs_34_bits() {
        let p = Program::decode(vec![0x01, b'A', 0x0C, 0x00]).unwrap();
        let r = levin_cost(&p, b"A", &EXACT, &TapeEnvironment::empty(), 10);
        assert_eq!(r.cost_bits, Cost::Finite(34));
        assert_eq!((r.program_bits, r.log_time_bits, r.halt_steps), (32, 2, 3));
    }

    #[test]
    fn non_comparable_or_non_halting_is_infinite() {
        let p = Program::decode(vec![0x01, b'A', 0x0C, 0x00]).unwrap();
        let r = levin_cost(&p, b"B", &EXACT, &TapeEnvironment::empty(), 10);
        assert_eq!(r.cost_bits, Cost::Infinite);
        assert!(!r.comparable);
        let r = levin_cost(&p, b"A", &EXACT, &TapeEnvironment::empty(), 2);
        assert_eq!(r.cost_bits, Cost::Infinite);
        assert_eq!(r.status, Status::FuelExhausted);
        assert_eq!(r.output, None);
    }

    #[test]
    fn literal_programs() {
        assert_eq!(literal_program(b"").bytes(), &[0x00]);
        assert_eq!(literal_program(b"A").bytes(), &[0x01, 0x41, 0x0C, 0x00]);
        let y: Vec<u8> = (0..100u8).map(|i| i.wrapping_mul(37)).collect();
        let p = literal_program(&y);
        assert_eq!(p.byte_len(), 2 * 100 + 2 + 23);
        let r = levin_cost(&p, &y, &EXACT, &TapeEnvironment::empty(), 1 << 20);
        assert_eq!(r.halt_steps, 808);
        assert_eq!(r.cost_bits, Cost::Finite(8 * 225 + 10));
    }

    #[test]
    fn literal_forms_agree_on_output() {
        for n in [0usize, 1, 14, 23, 24, 25, 254, 255, 256, 511, 700, 40_000] {
            let y: Vec<u8> = (0..n).map(|i| (i * 89 + n) as u8).collect();
            let p = literal_program(&y);
            let r = vm::run(&p, &TapeEnvironment::empty(), DEFAULT_FUEL);
            assert_eq!(r.output.as_deref(), Some(&y[..]), "n={n}");
            assert!(p.byte_len() <= 3 * n + 1);
        }
    }

    #[test]
    fn copy_program_streams_tape() {
        let p = copy_program(0);
        assert_eq!(p.byte_len(), COPY_PROGRAM_LEN);
        for content in [&b""[..], b"AB", b"\x00\x00\x01"] {
            let env = TapeEnvironment::new([content]).unwrap();
            let r = vm::run(&p, &env, 1 << 20);
            assert_eq!(r.output.as_deref(), Some(content));
        }
    }

    #[test]
    fn copy_program_crosses_the_low_byte_carry() {
        let s: Vec<u8> = (0..1024u32).map(|i| (i * 7 + 3) as u8).collect();
        let env = TapeEnvironment::new([&s]).unwrap();
        let r = levin_cost(&copy_program(0), &s, &EXACT, &env, 1 << 20);
        assert!(r.comparable);
        // 1020 plain iterations (25 steps), 4 through the hi-byte check (+5), 4 carries (+7), 12 to finish
        assert_eq!(r.halt_steps, 1020 * 25 + 4 * 30 + 4 * 7 + 12);
        assert_eq!(r.cost_bits, Cost::Finite(8 * 62 + 15));
    }

    #[test]
    fn copy_program_handles_the_maximum_tape() {
        let s: Vec<u8> = (0..crate::vm::MAX_TAPE_LEN)
            .map(|i| (i % 253) as u8)
            .collect();
        let env = TapeEnvironment::new([&s]).unwrap();
        let r = levin_cost(&copy_program(0), &s, &EXACT, &env, DEFAULT_FUEL);
        assert!(r.comparable);
    }

    #[test]
    fn cost_serializes_inf() {
        assert_eq!(serde_json::to_string(&Cost::Infinite).unwrap(), "\"inf\"");
        assert_eq!(
            serde_json::from_str::<Cost>("42").unwrap(),
            Cost::Finite(42)
        );
        assert_eq!(
            serde_json::from_str::<Cost>("\"inf\"").unwrap(),
            Cost::Infinite
        );
        assert!(Cost::Finite(u64::MAX) < Cost::Infinite);
    }
}
