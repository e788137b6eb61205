//! Reference search used to cross-check the engine's enumerator.
//!
//! The interpreter here is written against the published instruction table
//! and shares no code with the engine. Programs are explored by running them
//! with every code byte initially unknown; whenever execution fetches an
//! unknown byte the search branches over all 256 values. Each leaf stands for
//! every program that agrees on the fetched bytes, and all of those behave
//! identically, so this covers all `256^L` programs of length `L`. A taken
//! jump with an unknown target branches over the in-range targets and one
//! class for all out-of-range targets, which trap on the next fetch.
//!
//! Every program gets the full fuel its length allows under the budget, with
//! no pruning on output, stack depth or remaining fuel.

use std::collections::HashMap;

const STACK_LIMIT: usize = 1 << 16;
const OUTPUT_LIMIT: usize = 1 << 20;

#[derive(Clone, Default)]
struct Machine {
    pc: usize,
    stack: Vec<u8>,
    ram: HashMap<u16, u8>,
    out: Vec<u8>,
    steps: u64,
}

enum Step {
    Continue,
    Halt,
    Stop,
    Need(usize),
    NeedTarget(usize),
}

struct Search<'a> {
    tapes: &'a [Vec<u8>],
    accept: &'a dyn Fn(&[u8]) -> bool,
    fuel: u64,
    code: Vec<Option<u8>>,
    best: Option<(u64, Vec<u8>)>,
}

fn ceil_log2(t: u64) -> u64 {
    if t <= 1 {
        0
    } else {
        64 - (t - 1).leading_zeros() as u64
    }
}

impl Search<'_> {
    fn step(&self, m: &mut Machine) -> Step {
        let len = self.code.len();
        let pc = m.pc;
        if pc >= len {
            return Step::Stop;
        }
        let Some(op) = self.code[pc] else {
            return Step::Need(pc);
        };
        let imm_len = match op {
            0x01 | 0x0A | 0x0B => 1,
            0x08 | 0x09 => 2,
            0x00..=0x0F => 0,
            _ => return Step::Stop,
        };
        if pc + imm_len >= len {
            return Step::Stop;
        }
        if imm_len == 1 && self.code[pc + 1].is_none() {
            return Step::Need(pc + 1);
        }
        let imm = self.code.get(pc + 1).copied().flatten();
        let next = pc + 1 + imm_len;
        let target = || match (self.code[pc + 1], self.code[pc + 2]) {
            (Some(hi), Some(lo)) => Some(usize::from(hi) << 8 | usize::from(lo)),
            _ => None,
        };

        macro_rules! pop {
            () => {
                match m.stack.pop() {
                    Some(v) => v,
                    None => return Step::Stop,
                }
            };
        }
        macro_rules! push {
            ($v:expr) => {{
                if m.stack.len() >= STACK_LIMIT {
                    return Step::Stop;
                }
                m.stack.push($v);
            }};
        }

        match op {
            0x08 => {
                let Some(t) = target() else {
                    return Step::NeedTarget(pc + 1);
                };
                m.steps += 1;
                m.pc = t;
                return Step::Continue;
            }
            0x09 => {
                let Some(&top) = m.stack.last() else {
                    return Step::Stop;
                };
                if top == 0 {
                    let Some(t) = target() else {
                        return Step::NeedTarget(pc + 1);
                    };
                    m.stack.pop();
                    m.steps += 1;
                    m.pc = t;
                } else {
                    m.stack.pop();
                    m.steps += 1;
                    m.pc = next;
                }
                return Step::Continue;
            }
            _ => {}
        }

        m.steps += 1;
        m.pc = next;
        match op {
            0x00 => return Step::Halt,
            0x01 => push!(imm.unwrap()),
            0x02 => {
                pop!();
            }
            0x03 => {
                let v = pop!();
                push!(v);
                push!(v);
            }
            0x04 => {
                let b = pop!();
                let a = pop!();
                push!(b);
                push!(a);
            }
            0x05 => {
                let b = pop!();
                let a = pop!();
                push!(a.wrapping_add(b));
            }
            0x06 => {
                let b = pop!();
                let a = pop!();
                push!(a.wrapping_sub(b));
            }
            0x07 => {
                let a = pop!();
                push!(a.wrapping_add(1));
            }
            0x0A => {
                let Some(tape) = self.tapes.get(usize::from(imm.unwrap())) else {
                    return Step::Stop;
                };
                let lo = pop!();
                let hi = pop!();
                let index = usize::from(hi) << 8 | usize::from(lo);
                push!(tape.get(index).copied().unwrap_or(0));
            }
            0x0B => {
                let Some(tape) = self.tapes.get(usize::from(imm.unwrap())) else {
                    return Step::Stop;
                };
                push!((tape.len() >> 8) as u8);
                push!(tape.len() as u8);
            }
            0x0C => {
                let v = pop!();
                if m.out.len() >= OUTPUT_LIMIT {
                    return Step::Stop;
                }
                m.out.push(v);
            }
            0x0D => {
                let lo = pop!();
                let hi = pop!();
                let v = pop!();
                m.ram.insert(u16::from_be_bytes([hi, lo]), v);
            }
            0x0E => {
                let lo = pop!();
                let hi = pop!();
                push!(m
                    .ram
                    .get(&u16::from_be_bytes([hi, lo]))
                    .copied()
                    .unwrap_or(0));
            }
            0x0F => {}
            _ => unreachable!(),
        }
        Step::Continue
    }

    fn record(&mut self, steps: u64) {
        let cost = 8 * self.code.len() as u64 + ceil_log2(steps);
        let bytes: Vec<u8> = self.code.iter().map(|b| b.unwrap_or(0)).collect();
        let better = match &self.best {
            None => true,
            Some((c, b)) => (cost, bytes.len(), &bytes) < (*c, b.len(), b),
        };
        if better {
            self.best = Some((cost, bytes));
        }
    }

    fn explore(&mut self, mut m: Machine) {
        loop {
            if m.steps >= self.fuel {
                return;
            }
            match self.step(&mut m) {
                Step::Continue => {}
                Step::Stop => return,
                Step::Halt => {
                    if (self.accept)(&m.out) {
                        self.record(m.steps);
                    }
                    return;
                }
                Step::Need(pos) => {
                    for v in 0..=255u8 {
                        self.code[pos] = Some(v);
                        self.explore(m.clone());
                    }
                    self.code[pos] = None;
                    return;
                }
                Step::NeedTarget(pos) => {
                    let len = self.code.len();
                    let (hi0, lo0) = (self.code[pos], self.code[pos + 1]);
                    for t in 0..len {
                        let (hi, lo) = ((t >> 8) as u8, t as u8);
                        if hi0.is_some_and(|b| b != hi) || lo0.is_some_and(|b| b != lo) {
                            continue;
                        }
                        self.code[pos] = Some(hi);
                        self.code[pos + 1] = Some(lo);
                        self.explore(m.clone());
                    }
                    self.code[pos] = hi0;
                    self.code[pos + 1] = lo0;
                    return;
                }
            }
        }
    }
}

/// Minimum `(cost, program bytes)` over every program of at most
/// `budget / 8` bytes, each run with fuel `2^(budget - 8L)`.
pub fn oracle_min_cost(
    tapes: &[Vec<u8>],
    accept: &dyn Fn(&[u8]) -> bool,
    budget: u64,
) -> Option<(u64, Vec<u8>)> {
    let mut best: Option<(u64, Vec<u8>)> = None;
    for len in 1..=(budget / 8) as usize {
        let mut search = Search {
            tapes,
            accept,
            fuel: 1u64 << (budget - 8 * len as u64),
            code: vec![None; len],
            best: None,
        };
        search.explore(Machine::default());
        if let Some((c, b)) = search.best {
            if best
                .as_ref()
                .is_none_or(|(bc, bb)| (c, b.len(), &b) < (*bc, bb.len(), bb))
            {
                best = Some((c, b));
            }
        }
    }
    best
}
