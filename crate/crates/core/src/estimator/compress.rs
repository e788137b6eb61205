//! Upper bounds on conditional cost by compressing the target against the
//! mounted tapes and its own history, then emitting a decoder program.
//!
//! The machine cannot read its own code, so the token stream is carried as
//! a run of `PUSH` instructions (last byte first, leaving the first token
//! byte on top of the stack) followed by a fixed decoding loop. Inside the
//! program tokens use a byte-aligned form:
//!
//! | token        | bytes                                      |
//! |--------------|--------------------------------------------|
//! | end          | `0`                                        |
//! | literal      | `1, len, bytes...` (len 1..=255)           |
//! | output copy  | `2, off_hi, off_lo, len_hi, len_lo`        |
//! | tape copy    | `3 + tape, off_hi, off_lo, len_hi, len_lo` |
//!
//! [`encode_bits`] is the compact serialisation used in reports.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{Assembler, Label};
use crate::comparability::ComparabilityRelation;
use crate::cost::{levin_cost, literal_program, CostReport};
use crate::vm::{Program, TapeEnvironment, MAX_STACK_DEPTH};

pub const MIN_MATCH: usize = 4;
pub const MAX_COPY_LEN: usize = 4095;
pub const MAX_LITERAL_LEN: usize = 255;
/// Tapes above this id cannot be addressed by a token.
pub const MAX_TOKEN_TAPE: u8 = 15;
/// Output copies need the output history in RAM, below the decoder's
/// variables.
pub const MAX_HISTORY_LEN: usize = 0xF000;

const MAX_CANDIDATES: usize = 256;
const SHORT_LENGTHS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Token {
    Literal {
        bytes: Vec<u8>,
    },
    TapeCopy {
        tape: u8,
        offset: u16,
        len: u16,
    },
    /// Copy from absolute position `offset` of the output produced so far.
    OutputCopy {
        offset: u16,
        len: u16,
    },
}

impl Token {
    pub fn output_len(&self) -> usize {
        match self {
            Token::Literal { bytes } => bytes.len(),
            Token::TapeCopy { len, .. } | Token::OutputCopy { len, .. } => *len as usize,
        }
    }

    fn source(&self) -> Source {
        match self {
            Token::Literal { .. } => Source::Literal,
            Token::OutputCopy { .. } => Source::History,
            Token::TapeCopy { tape, .. } => Source::Tape(*tape),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token stream ended inside a token")]
    Truncated,
    #[error("token {index} is malformed: {reason}")]
    Malformed { index: usize, reason: &'static str },
    #[error("token {index} copies outside tape {tape}")]
    TapeRange { index: usize, tape: u8 },
    #[error("token {index} copies from output not yet produced")]
    HistoryRange { index: usize },
}

fn validate(index: usize, token: &Token) -> Result<(), TokenError> {
    let bad = |reason| Err(TokenError::Malformed { index, reason });
    match token {
        Token::Literal { bytes } if bytes.is_empty() || bytes.len() > MAX_LITERAL_LEN => {
            bad("literal length")
        }
        Token::TapeCopy { tape, .. } if *tape > MAX_TOKEN_TAPE => bad("tape id"),
        Token::TapeCopy { len, .. } | Token::OutputCopy { len, .. }
            if *len == 0 || *len as usize > MAX_COPY_LEN =>
        {
            bad("copy length")
        }
        _ => Ok(()),
    }
}

/// Reference decoder: what a token stream denotes in `env`.
pub fn expand(tokens: &[Token], env: &TapeEnvironment) -> Result<Vec<u8>, TokenError> {
    let mut out = Vec::new();
    for (index, token) in tokens.iter().enumerate() {
        validate(index, token)?;
        match token {
            Token::Literal { bytes } => out.extend_from_slice(bytes),
            Token::TapeCopy { tape, offset, len } => {
                let src = env
                    .tape(*tape)
                    .ok_or(TokenError::TapeRange { index, tape: *tape })?;
                let range = *offset as usize..*offset as usize + *len as usize;
                out.extend_from_slice(
                    src.get(range)
                        .ok_or(TokenError::TapeRange { index, tape: *tape })?,
                );
            }
            Token::OutputCopy { offset, len } => {
                if *offset as usize >= out.len() {
                    return Err(TokenError::HistoryRange { index });
                }
                for k in 0..*len as usize {
                    out.push(out[*offset as usize + k]);
                }
            }
        }
    }
    Ok(out)
}

struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn put(&mut self, value: u32, width: u32) {
        for i in (0..width).rev() {
            if self.used.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let bit = (value >> i) & 1;
            *self.bytes.last_mut().unwrap() |= (bit as u8) << (7 - self.used % 8);
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn get(&mut self, width: u32) -> Result<u32, TokenError> {
        let mut v = 0;
        for _ in 0..width {
            let byte = self.bytes.get(self.pos / 8).ok_or(TokenError::Truncated)?;
            v = (v << 1) | ((byte >> (7 - self.pos % 8)) & 1) as u32;
            self.pos += 1;
        }
        Ok(v)
    }
}

/// Packs tokens MSB-first: a 2-bit tag (`00` literal, `01` tape copy,
/// `10` output copy, `11` end), then 8-bit length and bytes for literals,
/// or 4-bit tape, 16-bit offset and 12-bit length for copies. Padding bits
/// after the end tag are zero.
pub fn encode_bits(tokens: &[Token]) -> Result<Vec<u8>, TokenError> {
    let mut w = BitWriter {
        bytes: Vec::new(),
        used: 0,
    };
    for (index, token) in tokens.iter().enumerate() {
        validate(index, token)?;
        match token {
            Token::Literal { bytes } => {
                w.put(0b00, 2);
                w.put(bytes.len() as u32, 8);
                for &b in bytes {
                    w.put(b as u32, 8);
                }
            }
            Token::TapeCopy { tape, offset, len } => {
                w.put(0b01, 2);
                w.put(*tape as u32, 4);
                w.put(*offset as u32, 16);
                w.put(*len as u32, 12);
            }
            Token::OutputCopy { offset, len } => {
                w.put(0b10, 2);
                w.put(*offset as u32, 16);
                w.put(*len as u32, 12);
            }
        }
    }
    w.put(0b11, 2);
    Ok(w.bytes)
}

pub fn decode_bits(bits: &[u8]) -> Result<Vec<Token>, TokenError> {
    let mut r = BitReader {
        bytes: bits,
        pos: 0,
    };
    let mut tokens = Vec::new();
    loop {
        let token = match r.get(2)? {
            0b00 => {
                let n = r.get(8)? as usize;
                let bytes = (0..n)
                    .map(|_| r.get(8).map(|b| b as u8))
                    .collect::<Result<_, _>>()?;
                Token::Literal { bytes }
            }
            0b01 => Token::TapeCopy {
                tape: r.get(4)? as u8,
                offset: r.get(16)? as u16,
                len: r.get(12)? as u16,
            },
            0b10 => Token::OutputCopy {
                offset: r.get(16)? as u16,
                len: r.get(12)? as u16,
            },
            _ => return Ok(tokens),
        };
        validate(tokens.len(), &token)?;
        tokens.push(token);
    }
}

/// Byte form carried inside decoder programs, terminated by the end token.
pub fn encode_stream(tokens: &[Token]) -> Vec<u8> {
    let mut out = Vec::new();
    for token in tokens {
        match token {
            Token::Literal { bytes } => {
                out.push(1);
                out.push(bytes.len() as u8);
                out.extend_from_slice(bytes);
            }
            Token::TapeCopy { tape, offset, len } => {
                out.push(3 + tape);
                out.extend_from_slice(&offset.to_be_bytes());
                out.extend_from_slice(&len.to_be_bytes());
            }
            Token::OutputCopy { offset, len } => {
                out.push(2);
                out.extend_from_slice(&offset.to_be_bytes());
                out.extend_from_slice(&len.to_be_bytes());
            }
        }
    }
    out.push(0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Source {
    Literal,
    History,
    Tape(u8),
}

impl Source {
    fn selector(self) -> u8 {
        match self {
            Source::Literal => 1,
            Source::History => 2,
            Source::Tape(t) => 3 + t,
        }
    }
}

// Decoder variables live at RAM address `v:v`, well above any history.
const SRC_HI: u8 = 0xF0;
const SRC_LO: u8 = 0xF1;
const CNT_HI: u8 = 0xF2;
const CNT_LO: u8 = 0xF3;
const SEL: u8 = 0xF4;
const OPOS_HI: u8 = 0xF5;
const OPOS_LO: u8 = 0xF6;

/// Increments the 16-bit variable pair `(hi, lo)`. The carry path lives at
/// the end of the program so the common path has no jump.
fn inc16(a: &mut Assembler, hi: u8, lo: u8, carries: &mut Vec<(Label, Label, u8)>) {
    let carry = a.label();
    let back = a.label();
    a.load_var(lo).inc().dup().store_var(lo).jz(carry);
    a.bind(back);
    carries.push((carry, back, hi));
}

/// Builds the decoder for `tokens`. Returns `None` if the program would not
/// fit the machine's address space or stack.
pub fn decoder_program(tokens: &[Token]) -> Option<Program> {
    let stream = encode_stream(tokens);
    if stream.len() + 8 > MAX_STACK_DEPTH {
        return None;
    }
    let mut sources: Vec<Source> = tokens.iter().map(Token::source).collect();
    sources.sort();
    sources.dedup();
    let literal = sources.contains(&Source::Literal);
    let history = sources.contains(&Source::History);
    let copies = sources.iter().any(|s| *s != Source::Literal);
    let dispatch = sources.len() > 1;

    let mut a = Assembler::new();
    for &b in stream.iter().rev() {
        a.push(b);
    }
    let (next, halt, lit_head, top, body, lo_zero, got, borrow) = (
        a.label(),
        a.label(),
        a.label(),
        a.label(),
        a.label(),
        a.label(),
        a.label(),
        a.label(),
    );
    let mut carries = Vec::new();

    a.bind(next).dup().jz(halt);
    if dispatch {
        a.dup().store_var(SEL);
    }
    if literal && copies {
        a.push(1).sub().jz(lit_head);
    } else {
        a.pop();
    }
    if copies {
        a.store_var(SRC_HI)
            .store_var(SRC_LO)
            .store_var(CNT_HI)
            .store_var(CNT_LO);
    }
    if literal {
        if copies {
            a.jmp(top);
        }
        a.bind(lit_head).store_var(CNT_LO);
    }

    a.bind(top).load_var(CNT_LO).jz(lo_zero);
    a.bind(body);
    if copies {
        a.load_var(SRC_HI).load_var(SRC_LO);
    }
    if dispatch {
        a.load_var(SEL);
        let blocks: Vec<Label> = sources.iter().map(|_| a.label()).collect();
        let mut prev = 0u8;
        for (i, s) in sources.iter().enumerate().take(sources.len() - 1) {
            a.push(s.selector() - prev).sub().dup().jz(blocks[i]);
            prev = s.selector();
        }
        // The unmatched fallthrough is the last source, so its block comes
        // first.
        let last = sources.len() - 1;
        let order = std::iter::once(last).chain(0..last);
        for (n, i) in order.enumerate() {
            a.bind(blocks[i]).pop();
            match sources[i] {
                Source::Literal => a.pop().pop(),
                Source::History => a.load(),
                Source::Tape(t) => a.read(t),
            };
            if n < last {
                a.jmp(got);
            }
        }
    } else {
        match sources.first() {
            Some(Source::History) => {
                a.load();
            }
            Some(Source::Tape(t)) => {
                a.read(*t);
            }
            _ => {}
        }
    }

    a.bind(got);
    if history {
        a.dup().load_var(OPOS_HI).load_var(OPOS_LO).store();
        inc16(&mut a, OPOS_HI, OPOS_LO, &mut carries);
    }
    a.out();
    if copies {
        inc16(&mut a, SRC_HI, SRC_LO, &mut carries);
    }
    a.load_var(CNT_LO).dup().jz(borrow);
    a.push(1).sub().store_var(CNT_LO).jmp(top);
    a.bind(borrow).push(1).sub().store_var(CNT_LO);
    a.load_var(CNT_HI).push(1).sub().store_var(CNT_HI).jmp(top);

    a.bind(lo_zero).load_var(CNT_HI).jz(next).jmp(body);
    for (carry, back, hi) in carries {
        a.bind(carry).load_var(hi).inc().store_var(hi).jmp(back);
    }
    a.bind(halt).halt();

    a.finish().ok()
}

/// Positions of every 4-gram in `data`.
fn gram_index(data: &[u8]) -> HashMap<[u8; MIN_MATCH], Vec<u32>> {
    let mut map: HashMap<[u8; MIN_MATCH], Vec<u32>> = HashMap::new();
    for (i, w) in data.windows(MIN_MATCH).enumerate() {
        map.entry(w.try_into().unwrap()).or_default().push(i as u32);
    }
    map
}

fn common_prefix(a: &[u8], b: &[u8], cap: usize) -> usize {
    a.iter()
        .zip(b)
        .take(cap)
        .take_while(|(x, y)| x == y)
        .count()
}

/// Longest match of `y[i..]` against a source, as `(offset, len)`.
fn longest(
    y: &[u8],
    i: usize,
    src: &[u8],
    index: &HashMap<[u8; MIN_MATCH], Vec<u32>>,
    history: bool,
) -> Option<(usize, usize)> {
    let key: [u8; MIN_MATCH] = y.get(i..i + MIN_MATCH)?.try_into().unwrap();
    let positions = index.get(&key)?;
    let cap = MAX_COPY_LEN.min(y.len() - i);
    let mut best: Option<(usize, usize)> = None;
    let candidates: Box<dyn Iterator<Item = &u32>> = if history {
        let end = positions.partition_point(|&p| (p as usize) < i);
        Box::new(positions[..end].iter().rev())
    } else {
        Box::new(positions.iter())
    };
    for &p in candidates.take(MAX_CANDIDATES) {
        let p = p as usize;
        // History copies may overlap the bytes they produce.
        let l = if history {
            common_prefix(&y[i..], &y[p..], cap)
        } else {
            common_prefix(&y[i..], &src[p..], cap)
        };
        if best.is_none_or(|(_, bl)| l > bl) {
            best = Some((p, l));
            if l == cap {
                break;
            }
        }
    }
    best.filter(|&(_, l)| l >= MIN_MATCH)
}

/// Optimal parse under the data-byte cost model: a copy costs 5 bytes, a
/// literal run `2 + r`.
fn parse(y: &[u8], tapes: &[(u8, &[u8])], history: bool) -> Vec<Token> {
    let n = y.len();
    let tape_index: Vec<_> = tapes.iter().map(|(_, t)| gram_index(t)).collect();
    let hist_index = history.then(|| gram_index(y));

    // Per position: candidate copies as (source, offset, max len), tapes
    // first by id, then history.
    let mut matches: Vec<Vec<(Source, usize, usize)>> = vec![Vec::new(); n];
    for (i, m) in matches.iter_mut().enumerate() {
        for ((id, t), idx) in tapes.iter().zip(&tape_index) {
            if let Some((off, l)) = longest(y, i, t, idx, false) {
                m.push((Source::Tape(*id), off, l));
            }
        }
        if let Some(idx) = &hist_index {
            if let Some((off, l)) = longest(y, i, y, idx, true) {
                m.push((Source::History, off, l));
            }
        }
    }

    #[derive(Clone, Copy)]
    enum Choice {
        End,
        Literal(usize),
        Copy(Source, usize, usize),
    }
    let mut cost = vec![u64::MAX; n + 1];
    let mut choice = vec![Choice::End; n + 1];
    cost[n] = 1;
    for i in (0..n).rev() {
        let mut best = (u64::MAX, Choice::End);
        for &(src, off, max) in &matches[i] {
            let lens =
                (MIN_MATCH..=max.min(SHORT_LENGTHS)).chain((max > SHORT_LENGTHS).then_some(max));
            for l in lens {
                let c = 5 + cost[i + l];
                if c < best.0 {
                    best = (c, Choice::Copy(src, off, l));
                }
            }
        }
        for r in 1..=MAX_LITERAL_LEN.min(n - i) {
            let c = 2 + r as u64 + cost[i + r];
            if c < best.0 {
                best = (c, Choice::Literal(r));
            }
        }
        cost[i] = best.0;
        choice[i] = best.1;
    }

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        match choice[i] {
            Choice::Literal(r) => {
                tokens.push(Token::Literal {
                    bytes: y[i..i + r].to_vec(),
                });
                i += r;
            }
            Choice::Copy(src, off, l) => {
                let (offset, len) = (off as u16, l as u16);
                tokens.push(match src {
                    Source::Tape(tape) => Token::TapeCopy { tape, offset, len },
                    _ => Token::OutputCopy { offset, len },
                });
                i += l;
            }
            Choice::End => unreachable!("every position before the end has a choice"),
        }
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compressed {
    /// Empty when the plain literal program won, either because it is
    /// cheaper or because the token stream did not fit.
    pub tokens: Vec<Token>,
    pub program: Program,
    pub report: CostReport,
}

/// Compresses `y` against `env` and measures the resulting program, keeping
/// the literal program instead whenever that is cheaper. Source
/// sets are pruned greedily: dropping a source shrinks the decoder, so each
/// used source is removed in turn while that lowers the measured cost.
pub fn compress(y: &[u8], env: &TapeEnvironment) -> Compressed {
    let measure = |tokens: Vec<Token>| -> Option<Compressed> {
        let program = decoder_program(&tokens)?;
        let report = levin_cost(&program, y, &ComparabilityRelation::Exact, env, u64::MAX);
        report.cost_bits.finite()?;
        Some(Compressed {
            tokens,
            program,
            report,
        })
    };
    let mut tapes: Vec<(u8, &[u8])> = env
        .iter()
        .enumerate()
        .take(MAX_TOKEN_TAPE as usize + 1)
        .map(|(i, t)| (i as u8, t))
        .collect();
    let mut history = y.len() <= MAX_HISTORY_LEN;

    let mut best = measure(parse(y, &tapes, history));
    if let Some(first) = &best {
        let mut used: Vec<Source> = first
            .tokens
            .iter()
            .map(Token::source)
            .filter(|s| *s != Source::Literal)
            .collect();
        used.sort();
        used.dedup();
        for src in used.into_iter().rev() {
            let (trial_tapes, trial_history) = match src {
                Source::Tape(t) => (
                    tapes.iter().copied().filter(|(id, _)| *id != t).collect(),
                    history,
                ),
                _ => (tapes.clone(), false),
            };
            let trial = measure(parse(y, &trial_tapes, trial_history));
            let current = best.as_ref().map(|b| b.report.cost_bits);
            if let Some(t) = trial {
                if Some(t.report.cost_bits) < current {
                    tapes = trial_tapes;
                    history = trial_history;
                    best = Some(t);
                }
            }
        }
    }
    let program = literal_program(y);
    let report = levin_cost(&program, y, &ComparabilityRelation::Exact, env, u64::MAX);
    let literal = Compressed {
        tokens: Vec::new(),
        program,
        report,
    };
    match best {
        Some(b) if b.report.cost_bits <= literal.report.cost_bits => b,
        _ => literal,
    }
}

/// [`compress`] without the token listing.
pub fn compress_to_program(y: &[u8], env: &TapeEnvironment) -> (Program, CostReport) {
    let c = compress(y, env);
    (c.program, c.report)
}
