//! Deterministic, fuel-metered byte-code stack machine.
//!
//! Every instruction costs exactly one step. Output is only defined when the
//! machine executes `HALT`; traps and fuel exhaustion leave it absent.
//!
//! | byte | mnemonic | effect |
//! |------|----------|--------|
//! | 0x00 | HALT     | stop, output becomes defined |
//! | 0x01 | PUSH k   | push immediate byte `k` |
//! | 0x02 | POP      | drop top |
//! | 0x03 | DUP      | duplicate top |
//! | 0x04 | SWAP     | swap top two |
//! | 0x05 | ADD      | `a b -- a+b` (mod 256) |
//! | 0x06 | SUB      | `a b -- a-b` (mod 256) |
//! | 0x07 | INC      | `a -- a+1` (mod 256) |
//! | 0x08 | JMP a16  | jump to absolute big-endian address |
//! | 0x09 | JZ a16   | pop; jump iff zero |
//! | 0x0A | READ t   | `hi lo -- tape[t][hi:lo]` (0 past the end) |
//! | 0x0B | LEN t    | `-- hi lo` of the length of tape `t` |
//! | 0x0C | OUT      | pop and append to output |
//! | 0x0D | STORE    | `v hi lo --`, `ram[hi:lo] = v` |
//! | 0x0E | LOAD     | `hi lo -- ram[hi:lo]` |
//! | 0x0F | NOP      | nothing |
//!
//! Multi-byte operands are big-endian; for stack operands the high byte is
//! pushed first, so the low byte is on top.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest tape the 16-bit addressing of `READ`/`LEN` can describe.
pub const MAX_TAPE_LEN: usize = 0xFFFF;
/// Maximum number of stack cells.
pub const MAX_STACK_DEPTH: usize = 1 << 16;
/// Maximum number of output bytes.
pub const MAX_OUTPUT_LEN: usize = 1 << 20;
/// Scratch memory size; addresses are 16-bit so accesses wrap naturally.
pub const RAM_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Halt = 0x00,
    Push = 0x01,
    Pop = 0x02,
    Dup = 0x03,
    Swap = 0x04,
    Add = 0x05,
    Sub = 0x06,
    Inc = 0x07,
    Jmp = 0x08,
    Jz = 0x09,
    Read = 0x0A,
    Len = 0x0B,
    Out = 0x0C,
    Store = 0x0D,
    Load = 0x0E,
    Nop = 0x0F,
}

impl Opcode {
    pub const ALL: [Opcode; 16] = [
        Opcode::Halt,
        Opcode::Push,
        Opcode::Pop,
        Opcode::Dup,
        Opcode::Swap,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Inc,
        Opcode::Jmp,
        Opcode::Jz,
        Opcode::Read,
        Opcode::Len,
        Opcode::Out,
        Opcode::Store,
        Opcode::Load,
        Opcode::Nop,
    ];

    pub fn from_byte(byte: u8) -> Option<Opcode> {
        Self::ALL.get(byte as usize).copied()
    }

    /// Number of inline operand bytes following the opcode.
    pub fn immediate_len(self) -> usize {
        match self {
            Opcode::Push | Opcode::Read | Opcode::Len => 1,
            Opcode::Jmp | Opcode::Jz => 2,
            _ => 0,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Halt => "HALT",
            Opcode::Push => "PUSH",
            Opcode::Pop => "POP",
            Opcode::Dup => "DUP",
            Opcode::Swap => "SWAP",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Inc => "INC",
            Opcode::Jmp => "JMP",
            Opcode::Jz => "JZ",
            Opcode::Read => "READ",
            Opcode::Len => "LEN",
            Opcode::Out => "OUT",
            Opcode::Store => "STORE",
            Opcode::Load => "LOAD",
            Opcode::Nop => "NOP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("program is empty")]
    Empty,
}

/// A self-contained byte-code program. Its description length is
/// `8 * len` bits, always.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    bytes: Vec<u8>,
}

impl Program {
    /// Accepts any non-empty byte string. Bad opcodes are reported as traps
    /// when executed, which keeps enumeration over raw bytes total.
    pub fn decode(bytes: impl Into<Vec<u8>>) -> Result<Program, DecodeError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(DecodeError::Empty);
        }
        Ok(Program { bytes })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn byte_len(&self) -> usize {
        self.bytes.len()
    }

    pub fn bit_len(&self) -> u64 {
        8 * self.bytes.len() as u64
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Human-readable listing, one instruction per line.
    pub fn disassemble(&self) -> String {
        let mut out = String::new();
        let mut pc = 0;
        while pc < self.bytes.len() {
            let byte = self.bytes[pc];
            let line = match Opcode::from_byte(byte) {
                None => {
                    pc += 1;
                    format!("{:04x}  .byte 0x{byte:02x}", pc - 1)
                }
                Some(op) => {
                    let imm = op.immediate_len();
                    let start = pc;
                    pc += 1 + imm;
                    match (imm, self.bytes.get(start + 1..start + 1 + imm)) {
                        (0, _) => format!("{start:04x}  {}", op.mnemonic()),
                        (1, Some(b)) => format!("{start:04x}  {} 0x{:02x}", op.mnemonic(), b[0]),
                        (2, Some(b)) => format!(
                            "{start:04x}  {} 0x{:04x}",
                            op.mnemonic(),
                            u16::from_be_bytes([b[0], b[1]])
                        ),
                        _ => format!("{start:04x}  {} <truncated>", op.mnemonic()),
                    }
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Program({})", self.to_hex())
    }
}

/// Serialised as a lowercase hex string.
impl Serialize for Program {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        Program::decode(bytes).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for [`Program::decode`].
pub fn decode_program(bytes: &[u8]) -> Result<Program, DecodeError> {
    Program::decode(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("tape {index} is {len} bytes, limit is {MAX_TAPE_LEN}")]
    TapeTooLarge { index: usize, len: usize },
    #[error("at most 256 tapes can be mounted")]
    TooManyTapes,
}

/// Ordered, read-only input tapes. Tape ids are dense from 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TapeEnvironment {
    tapes: Vec<Arc<[u8]>>,
}

impl TapeEnvironment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, T>(tapes: I) -> Result<Self, EnvError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut env = Self::default();
        for tape in tapes {
            env.mount(tape.as_ref())?;
        }
        Ok(env)
    }

    /// Mounts `content` at the next free id and returns that id.
    pub fn mount(&mut self, content: &[u8]) -> Result<u8, EnvError> {
        let index = self.tapes.len();
        if index > u8::MAX as usize {
            return Err(EnvError::TooManyTapes);
        }
        if content.len() > MAX_TAPE_LEN {
            return Err(EnvError::TapeTooLarge {
                index,
                len: content.len(),
            });
        }
        self.tapes.push(Arc::from(content));
        Ok(index as u8)
    }

    pub fn tape(&self, id: u8) -> Option<&[u8]> {
        self.tapes.get(id as usize).map(|t| &t[..])
    }

    pub fn len(&self) -> usize {
        self.tapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tapes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.tapes.iter().map(|t| &t[..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrapKind {
    StackUnderflow,
    StackOverflow,
    /// Fetch or operand read at or beyond the end of the program.
    PcOutOfRange,
    InvalidOpcode {
        opcode: u8,
    },
    UnmountedTape {
        tape: u8,
    },
    OutputOverflow,
}

impl fmt::Display for TrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrapKind::StackUnderflow => f.write_str("stack underflow"),
            TrapKind::StackOverflow => f.write_str("stack overflow"),
            TrapKind::PcOutOfRange => f.write_str("pc out of range"),
            TrapKind::InvalidOpcode { opcode } => write!(f, "invalid opcode 0x{opcode:02x}"),
            TrapKind::UnmountedTape { tape } => write!(f, "unmounted tape {tape}"),
            TrapKind::OutputOverflow => f.write_str("output overflow"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Status {
    Halted,
    FuelExhausted,
    Trap { trap: TrapKind },
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Halted => f.write_str("halted"),
            Status::FuelExhausted => f.write_str("fuel exhausted"),
            Status::Trap { trap } => write!(f, "trap: {trap}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExecutionResult {
    pub status: Status,
    /// Present iff `status == Halted`.
    pub output: Option<Vec<u8>>,
    /// Instructions executed, including `HALT` or the trapping instruction.
    pub steps: u64,
}

impl ExecutionResult {
    pub fn halted(&self) -> bool {
        self.status == Status::Halted
    }
}

/// Runs `program` against `env` for at most `fuel` instructions.
pub fn run(program: &Program, env: &TapeEnvironment, fuel: u64) -> ExecutionResult {
    let mut machine = Machine::new();
    let code = program.bytes();
    loop {
        if machine.steps >= fuel {
            return ExecutionResult {
                status: Status::FuelExhausted,
                output: None,
                steps: machine.steps,
            };
        }
        match machine.step(code, env) {
            Step::Continue => {}
            Step::Halted => {
                let steps = machine.steps;
                return ExecutionResult {
                    status: Status::Halted,
                    output: Some(machine.output),
                    steps,
                };
            }
            Step::Trap(trap) => {
                return ExecutionResult {
                    status: Status::Trap { trap },
                    output: None,
                    steps: machine.steps,
                };
            }
            Step::NeedByte(_) => unreachable!("complete programs never miss a byte"),
        }
    }
}

/// Result of fetching a code byte through a [`CodeView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Fetch {
    Byte(u8),
    End,
    /// The byte exists but has not been chosen yet (partial programs during
    /// enumeration).
    Unknown,
}

pub(crate) trait CodeView {
    fn fetch(&self, pos: usize) -> Fetch;
}

impl CodeView for [u8] {
    #[inline]
    fn fetch(&self, pos: usize) -> Fetch {
        match self.get(pos) {
            Some(&b) => Fetch::Byte(b),
            None => Fetch::End,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    Continue,
    Halted,
    Trap(TrapKind),
    /// Execution depends on code byte `pos`, which is unknown. Machine state
    /// is untouched.
    NeedByte(usize),
}

/// Zero-initialised scratch memory, allocated on first write.
#[derive(Debug, Clone, Default)]
struct Ram(Option<Box<[u8]>>);

impl Ram {
    #[inline]
    fn load(&self, addr: u16) -> u8 {
        self.0.as_ref().map_or(0, |m| m[addr as usize])
    }

    #[inline]
    fn store(&mut self, addr: u16, value: u8) {
        let mem = self
            .0
            .get_or_insert_with(|| vec![0u8; RAM_SIZE].into_boxed_slice());
        mem[addr as usize] = value;
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Machine {
    pc: usize,
    stack: Vec<u8>,
    ram: Ram,
    pub(crate) output: Vec<u8>,
    pub(crate) steps: u64,
}

macro_rules! pop {
    ($self:ident) => {
        match $self.stack.pop() {
            Some(v) => v,
            None => return Step::Trap(TrapKind::StackUnderflow),
        }
    };
}

macro_rules! push {
    ($self:ident, $v:expr) => {{
        if $self.stack.len() >= MAX_STACK_DEPTH {
            return Step::Trap(TrapKind::StackOverflow);
        }
        $self.stack.push($v);
    }};
}

impl Machine {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn pc(&self) -> usize {
        self.pc
    }

    pub(crate) fn stack_depth(&self) -> usize {
        self.stack.len()
    }

    /// Executes one instruction. All code bytes an instruction needs are
    /// fetched before any state changes, so `NeedByte` leaves the machine
    /// exactly as it was.
    #[inline]
    pub(crate) fn step<C: CodeView + ?Sized>(&mut self, code: &C, env: &TapeEnvironment) -> Step {
        let pc = self.pc;
        let byte = match code.fetch(pc) {
            Fetch::Byte(b) => b,
            Fetch::End => {
                self.steps += 1;
                return Step::Trap(TrapKind::PcOutOfRange);
            }
            Fetch::Unknown => return Step::NeedByte(pc),
        };
        let Some(op) = Opcode::from_byte(byte) else {
            self.steps += 1;
            return Step::Trap(TrapKind::InvalidOpcode { opcode: byte });
        };
        let mut imm = [0u8; 2];
        for (i, slot) in imm.iter_mut().enumerate().take(op.immediate_len()) {
            match code.fetch(pc + 1 + i) {
                Fetch::Byte(b) => *slot = b,
                Fetch::End => {
                    self.steps += 1;
                    return Step::Trap(TrapKind::PcOutOfRange);
                }
                Fetch::Unknown => return Step::NeedByte(pc + 1 + i),
            }
        }
        self.steps += 1;
        self.pc = pc + 1 + op.immediate_len();

        match op {
            Opcode::Halt => return Step::Halted,
            Opcode::Push => push!(self, imm[0]),
            Opcode::Pop => {
                pop!(self);
            }
            Opcode::Dup => {
                let v = pop!(self);
                push!(self, v);
                push!(self, v);
            }
            Opcode::Swap => {
                let b = pop!(self);
                let a = pop!(self);
                self.stack.push(b);
                self.stack.push(a);
            }
            Opcode::Add => {
                let b = pop!(self);
                let a = pop!(self);
                self.stack.push(a.wrapping_add(b));
            }
            Opcode::Sub => {
                let b = pop!(self);
                let a = pop!(self);
                self.stack.push(a.wrapping_sub(b));
            }
            Opcode::Inc => {
                let a = pop!(self);
                self.stack.push(a.wrapping_add(1));
            }
            Opcode::Jmp => self.pc = u16::from_be_bytes(imm) as usize,
            Opcode::Jz => {
                if pop!(self) == 0 {
                    self.pc = u16::from_be_bytes(imm) as usize;
                }
            }
            Opcode::Read => {
                let tape = imm[0];
                let Some(content) = env.tape(tape) else {
                    return Step::Trap(TrapKind::UnmountedTape { tape });
                };
                let lo = pop!(self);
                let hi = pop!(self);
                let index = u16::from_be_bytes([hi, lo]) as usize;
                self.stack.push(content.get(index).copied().unwrap_or(0));
            }
            Opcode::Len => {
                let tape = imm[0];
                let Some(content) = env.tape(tape) else {
                    return Step::Trap(TrapKind::UnmountedTape { tape });
                };
                let [hi, lo] = (content.len() as u16).to_be_bytes();
                push!(self, hi);
                push!(self, lo);
            }
            Opcode::Out => {
                let v = pop!(self);
                if self.output.len() >= MAX_OUTPUT_LEN {
                    return Step::Trap(TrapKind::OutputOverflow);
                }
                self.output.push(v);
            }
            Opcode::Store => {
                let lo = pop!(self);
                let hi = pop!(self);
                let value = pop!(self);
                self.ram.store(u16::from_be_bytes([hi, lo]), value);
            }
            Opcode::Load => {
                let lo = pop!(self);
                let hi = pop!(self);
                self.stack.push(self.ram.load(u16::from_be_bytes([hi, lo])));
            }
            Opcode::Nop => {}
        }
        Step::Continue
    }
}
