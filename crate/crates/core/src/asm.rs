//! A tiny label-resolving assembler for hand-written VM programs.

use thiserror::Error;

use crate::vm::{Opcode, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("label {0} used but never bound")]
    UnboundLabel(usize),
    #[error("label {label} bound at 0x{addr:x}, beyond 16-bit jump range")]
    AddressTooLarge { label: usize, addr: usize },
    #[error("empty program")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label(usize);

#[derive(Debug, Default, Clone)]
pub struct Assembler {
    code: Vec<u8>,
    labels: Vec<Option<usize>>,
    fixups: Vec<(usize, Label)>,
}

impl Assembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn here(&self) -> usize {
        self.code.len()
    }

    pub fn label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    pub fn bind(&mut self, label: Label) -> &mut Self {
        debug_assert!(self.labels[label.0].is_none(), "label bound twice");
        self.labels[label.0] = Some(self.code.len());
        self
    }

    fn op(&mut self, op: Opcode) -> &mut Self {
        self.code.push(op as u8);
        self
    }

    fn jump(&mut self, op: Opcode, target: Label) -> &mut Self {
        self.code.push(op as u8);
        self.fixups.push((self.code.len(), target));
        self.code.extend_from_slice(&[0, 0]);
        self
    }

    pub fn halt(&mut self) -> &mut Self {
        self.op(Opcode::Halt)
    }
    pub fn push(&mut self, value: u8) -> &mut Self {
        self.code.extend_from_slice(&[Opcode::Push as u8, value]);
        self
    }
    pub fn pop(&mut self) -> &mut Self {
        self.op(Opcode::Pop)
    }
    pub fn dup(&mut self) -> &mut Self {
        self.op(Opcode::Dup)
    }
    pub fn swap(&mut self) -> &mut Self {
        self.op(Opcode::Swap)
    }
    pub fn add(&mut self) -> &mut Self {
        self.op(Opcode::Add)
    }
    pub fn sub(&mut self) -> &mut Self {
        self.op(Opcode::Sub)
    }
    pub fn inc(&mut self) -> &mut Self {
        self.op(Opcode::Inc)
    }
    pub fn jmp(&mut self, target: Label) -> &mut Self {
        self.jump(Opcode::Jmp, target)
    }
    pub fn jz(&mut self, target: Label) -> &mut Self {
        self.jump(Opcode::Jz, target)
    }
    pub fn read(&mut self, tape: u8) -> &mut Self {
        self.code.extend_from_slice(&[Opcode::Read as u8, tape]);
        self
    }
    pub fn len(&mut self, tape: u8) -> &mut Self {
        self.code.extend_from_slice(&[Opcode::Len as u8, tape]);
        self
    }
    pub fn out(&mut self) -> &mut Self {
        self.op(Opcode::Out)
    }
    pub fn store(&mut self) -> &mut Self {
        self.op(Opcode::Store)
    }
    pub fn load(&mut self) -> &mut Self {
        self.op(Opcode::Load)
    }
    pub fn nop(&mut self) -> &mut Self {
        self.op(Opcode::Nop)
    }

    /// Loads the RAM cell at address `var:var` (three bytes cheaper than
    /// pushing a general 16-bit address).
    pub fn load_var(&mut self, var: u8) -> &mut Self {
        self.push(var).dup().load()
    }

    /// Pops the top of stack into RAM cell `var:var`.
    pub fn store_var(&mut self, var: u8) -> &mut Self {
        self.push(var).dup().store()
    }

    pub fn finish(self) -> Result<Program, AsmError> {
        let mut code = self.code;
        for (at, label) in self.fixups {
            let addr = self.labels[label.0].ok_or(AsmError::UnboundLabel(label.0))?;
            let addr16 = u16::try_from(addr).map_err(|_| AsmError::AddressTooLarge {
                label: label.0,
                addr,
            })?;
            code[at..at + 2].copy_from_slice(&addr16.to_be_bytes());
        }
        Program::decode(code).map_err(|_| AsmError::Empty)
    }
}
