//! Commit-reveal match in front of a referee.
//!
//! Each party first publishes a salted SHA-256 commitment to its program
//! together with the cost it claims and a fuel bound. Only after both
//! commitments are in may either party open. The referee checks openings
//! against commitments and the agreed background, recomputes both costs in
//! the proper environments and publishes the costs and their difference.
//! Programs stay out of the public transcript unless disclosure is public.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::casebook::Case;
use crate::cost::{levin_cost, Cost, CostReport};
use crate::dersim::{build_env, Role};
use crate::vm::{EnvError, Program, Status, TrapKind};

pub const SALT_LEN: usize = 32;

mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

/// `SHA-256(salt ‖ role byte ‖ program bytes)`.
pub fn commitment_digest(salt: &[u8; SALT_LEN], role: Role, program: &Program) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(salt);
    h.update([role.tag()]);
    h.update(program.bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub role: Role,
    #[serde(with = "hex32")]
    pub digest: [u8; 32],
    pub claimed_cost_bits: u64,
    pub claimed_fuel_bound: u64,
}

pub fn commit(
    program: &Program,
    salt: &[u8; SALT_LEN],
    role: Role,
    claimed_cost_bits: u64,
    claimed_fuel_bound: u64,
) -> Commitment {
    Commitment {
        role,
        digest: commitment_digest(salt, role, program),
        claimed_cost_bits,
        claimed_fuel_bound,
    }
}

/// Whether `program` and `salt` open `commitment`.
pub fn verify_opening(commitment: &Commitment, program: &Program, salt: &[u8; SALT_LEN]) -> bool {
    commitment_digest(salt, commitment.role, program) == commitment.digest
}

/// An opening: the committed program, its salt and the background the party
/// agreed to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub role: Role,
    pub program: Program,
    #[serde(with = "hex32")]
    pub salt: [u8; SALT_LEN],
    #[serde(with = "hex32")]
    pub bg_digest: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("{0} opened without a prior commitment")]
    MissingCommitment(Role),
    #[error("{0} already committed")]
    DuplicateCommitment(Role),
    #[error("{0} already opened")]
    DuplicateOpening(Role),
    #[error("{0} opened before both parties committed")]
    OpeningBeforeCommitments(Role),
    #[error("{0}'s opening does not match its commitment")]
    CommitmentMismatch(Role),
    #[error("{0} bound to a different background")]
    BgDigestMismatch(Role),
    #[error("{0} has not opened")]
    MissingOpening(Role),
    #[error(transparent)]
    Environment(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// The defendant tried to read the original work's tape.
    ForbiddenTapeAccess { role: Role, tape: u8 },
    /// Announced cost differs from the referee's recomputation.
    ClaimMismatch {
        role: Role,
        claimed_bits: u64,
        recomputed: Cost,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verified {
    pub plaintiff: bool,
    pub defendant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub c_p: Cost,
    pub c_r: Cost,
    /// `c_r - c_p` when both are finite.
    pub dersim_bits: Option<i64>,
    pub verified: Verified,
    pub violations: Vec<Violation>,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Disclosure {
    /// Openings appear in the transcript as a program hash only.
    #[default]
    Private,
    Public,
}

/// Transcript messages. On the wire each is `type byte ‖ u32 BE payload
/// length ‖ payload`; integers are big-endian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// `0x01`: background digest, x tape id, referee fuel cap.
    Setup {
        bg_digest: [u8; 32],
        x_tape: u8,
        fuel_cap: u64,
    },
    /// `0x02`: role, digest, claimed cost, claimed fuel bound.
    Commit(Commitment),
    /// `0x03`: role, salt, then `0 ‖ SHA-256(program)` or `1 ‖ program`.
    Open {
        role: Role,
        salt: [u8; SALT_LEN],
        program: OpenedProgram,
    },
    /// `0x04`: role, cost (`u64::MAX` for infinite), halting steps, verified.
    Result {
        role: Role,
        cost: Cost,
        steps: u64,
        verified: bool,
    },
    /// `0x05`: role, kind (`1` forbidden tape, `2` claim mismatch), detail.
    Violation(Violation),
    /// `0x06`: `1 ‖ i64` gap, or `0` when undefined.
    Outcome { dersim_bits: Option<i64> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpenedProgram {
    Hash([u8; 32]),
    Full(Program),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("transcript truncated")]
    Truncated,
    #[error("unknown record type 0x{0:02x}")]
    UnknownType(u8),
    #[error("malformed record of type 0x{0:02x}")]
    Malformed(u8),
}

fn role_from(b: u8) -> Option<Role> {
    match b {
        0x01 => Some(Role::Plaintiff),
        0x02 => Some(Role::Defendant),
        _ => None,
    }
}

fn cost_word(c: Cost) -> u64 {
    c.finite().unwrap_or(u64::MAX)
}

fn word_cost(w: u64) -> Cost {
    if w == u64::MAX {
        Cost::Infinite
    } else {
        Cost::Finite(w)
    }
}

impl Message {
    fn type_byte(&self) -> u8 {
        match self {
            Message::Setup { .. } => 0x01,
            Message::Commit(_) => 0x02,
            Message::Open { .. } => 0x03,
            Message::Result { .. } => 0x04,
            Message::Violation(_) => 0x05,
            Message::Outcome { .. } => 0x06,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Message::Setup {
                bg_digest,
                x_tape,
                fuel_cap,
            } => {
                p.extend_from_slice(bg_digest);
                p.push(*x_tape);
                p.extend_from_slice(&fuel_cap.to_be_bytes());
            }
            Message::Commit(c) => {
                p.push(c.role.tag());
                p.extend_from_slice(&c.digest);
                p.extend_from_slice(&c.claimed_cost_bits.to_be_bytes());
                p.extend_from_slice(&c.claimed_fuel_bound.to_be_bytes());
            }
            Message::Open {
                role,
                salt,
                program,
            } => {
                p.push(role.tag());
                p.extend_from_slice(salt);
                match program {
                    OpenedProgram::Hash(h) => {
                        p.push(0);
                        p.extend_from_slice(h);
                    }
                    OpenedProgram::Full(prog) => {
                        p.push(1);
                        p.extend_from_slice(prog.bytes());
                    }
                }
            }
            Message::Result {
                role,
                cost,
                steps,
                verified,
            } => {
                p.push(role.tag());
                p.extend_from_slice(&cost_word(*cost).to_be_bytes());
                p.extend_from_slice(&steps.to_be_bytes());
                p.push(*verified as u8);
            }
            Message::Violation(v) => match v {
                Violation::ForbiddenTapeAccess { role, tape } => {
                    p.extend_from_slice(&[role.tag(), 1]);
                    p.extend_from_slice(&(*tape as u64).to_be_bytes());
                    p.extend_from_slice(&0u64.to_be_bytes());
                }
                Violation::ClaimMismatch {
                    role,
                    claimed_bits,
                    recomputed,
                } => {
                    p.extend_from_slice(&[role.tag(), 2]);
                    p.extend_from_slice(&claimed_bits.to_be_bytes());
                    p.extend_from_slice(&cost_word(*recomputed).to_be_bytes());
                }
            },
            Message::Outcome { dersim_bits } => match dersim_bits {
                Some(d) => {
                    p.push(1);
                    p.extend_from_slice(&d.to_be_bytes());
                }
                None => p.push(0),
            },
        }
        p
    }

    fn parse(ty: u8, p: &[u8]) -> Result<Message, TranscriptError> {
        let bad = TranscriptError::Malformed(ty);
        let u64_at = |i: usize| -> Result<u64, TranscriptError> {
            Ok(u64::from_be_bytes(
                p.get(i..i + 8).ok_or(bad.clone())?.try_into().unwrap(),
            ))
        };
        let arr32 = |i: usize| -> Result<[u8; 32], TranscriptError> {
            Ok(p.get(i..i + 32).ok_or(bad.clone())?.try_into().unwrap())
        };
        let role = || p.first().copied().and_then(role_from).ok_or(bad.clone());
        let exact = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(bad.clone())
            }
        };
        Ok(match ty {
            0x01 => {
                exact(41)?;
                Message::Setup {
                    bg_digest: arr32(0)?,
                    x_tape: p[32],
                    fuel_cap: u64_at(33)?,
                }
            }
            0x02 => {
                exact(49)?;
                Message::Commit(Commitment {
                    role: role()?,
                    digest: arr32(1)?,
                    claimed_cost_bits: u64_at(33)?,
                    claimed_fuel_bound: u64_at(41)?,
                })
            }
            0x03 => {
                let role = role()?;
                let salt = arr32(1)?;
                let program = match p.get(33) {
                    Some(0) => {
                        exact(66)?;
                        OpenedProgram::Hash(arr32(34)?)
                    }
                    Some(1) => {
                        OpenedProgram::Full(Program::decode(&p[34..]).map_err(|_| bad.clone())?)
                    }
                    _ => return Err(bad),
                };
                Message::Open {
                    role,
                    salt,
                    program,
                }
            }
            0x04 => {
                exact(18)?;
                let verified = match p[17] {
                    0 => false,
                    1 => true,
                    _ => return Err(bad),
                };
                Message::Result {
                    role: role()?,
                    cost: word_cost(u64_at(1)?),
                    steps: u64_at(9)?,
                    verified,
                }
            }
            0x05 => {
                exact(18)?;
                let role = role()?;
                let (a, b) = (u64_at(2)?, u64_at(10)?);
                Message::Violation(match p[1] {
                    1 if a <= u8::MAX as u64 && b == 0 => Violation::ForbiddenTapeAccess {
                        role,
                        tape: a as u8,
                    },
                    2 => Violation::ClaimMismatch {
                        role,
                        claimed_bits: a,
                        recomputed: word_cost(b),
                    },
                    _ => return Err(bad),
                })
            }
            0x06 => match p.first() {
                Some(0) if p.len() == 1 => Message::Outcome { dersim_bits: None },
                Some(1) if p.len() == 9 => Message::Outcome {
                    dersim_bits: Some(u64_at(1)? as i64),
                },
                _ => return Err(bad),
            },
            other => return Err(TranscriptError::UnknownType(other)),
        })
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Setup {
                bg_digest,
                x_tape,
                fuel_cap,
            } => {
                write!(
                    f,
                    "setup bg={} x_tape={x_tape} fuel_cap={fuel_cap}",
                    hex::encode(bg_digest)
                )
            }
            Message::Commit(c) => write!(
                f,
                "commit {} digest={} claimed_cost={} fuel_bound={}",
                c.role,
                hex::encode(c.digest),
                c.claimed_cost_bits,
                c.claimed_fuel_bound
            ),
            Message::Open {
                role,
                salt,
                program,
            } => {
                write!(f, "open {role} salt={} ", hex::encode(salt))?;
                match program {
                    OpenedProgram::Hash(h) => write!(f, "program_sha256={}", hex::encode(h)),
                    OpenedProgram::Full(p) => write!(f, "program={}", p.to_hex()),
                }
            }
            Message::Result {
                role,
                cost,
                steps,
                verified,
            } => {
                write!(
                    f,
                    "result {role} cost={cost} steps={steps} verified={verified}"
                )
            }
            Message::Violation(Violation::ForbiddenTapeAccess { role, tape }) => {
                write!(f, "violation {role} forbidden_tape_access tape={tape}")
            }
            Message::Violation(Violation::ClaimMismatch {
                role,
                claimed_bits,
                recomputed,
            }) => {
                write!(f, "violation {role} claim_mismatch claimed={claimed_bits} recomputed={recomputed}")
            }
            Message::Outcome {
                dersim_bits: Some(d),
            } => write!(f, "outcome dersim_bits={d}"),
            Message::Outcome { dersim_bits: None } => write!(f, "outcome dersim_bits=undefined"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.messages {
            let payload = m.payload();
            out.push(m.type_byte());
            out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
            out.extend_from_slice(&payload);
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Transcript, TranscriptError> {
        let mut messages = Vec::new();
        while let Some((&ty, rest)) = bytes.split_first() {
            let len = rest.get(..4).ok_or(TranscriptError::Truncated)?;
            let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
            let payload = rest.get(4..4 + len).ok_or(TranscriptError::Truncated)?;
            messages.push(Message::parse(ty, payload)?);
            bytes = &rest[4 + len..];
        }
        Ok(Transcript { messages })
    }

    /// One line per message.
    pub fn render(&self) -> String {
        self.messages.iter().map(|m| format!("{m}\n")).collect()
    }
}

impl Serialize for Transcript {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.messages.iter().map(|m| m.to_string()))
    }
}

fn slot(role: Role) -> usize {
    match role {
        Role::Plaintiff => 0,
        Role::Defendant => 1,
    }
}

/// Sequential match state for one case.
pub struct Referee<'a> {
    case: &'a Case,
    fuel_cap: u64,
    disclosure: Disclosure,
    bg_digest: [u8; 32],
    commitments: [Option<Commitment>; 2],
    openings: [Option<Submission>; 2],
    transcript: Transcript,
}

impl<'a> Referee<'a> {
    pub fn new(case: &'a Case, fuel_cap: u64, disclosure: Disclosure) -> Referee<'a> {
        let bg_digest = case.bg.digest();
        let x_tape = case.bg.x_tape_id().min(u8::MAX as usize) as u8;
        let transcript = Transcript {
            messages: vec![Message::Setup {
                bg_digest,
                x_tape,
                fuel_cap,
            }],
        };
        Referee {
            case,
            fuel_cap,
            disclosure,
            bg_digest,
            commitments: [None, None],
            openings: [None, None],
            transcript,
        }
    }

    pub fn bg_digest(&self) -> [u8; 32] {
        self.bg_digest
    }

    pub fn commit(&mut self, c: Commitment) -> Result<(), MatchError> {
        let i = slot(c.role);
        if self.commitments[i].is_some() {
            return Err(MatchError::DuplicateCommitment(c.role));
        }
        self.transcript.messages.push(Message::Commit(c.clone()));
        self.commitments[i] = Some(c);
        Ok(())
    }

    pub fn open(&mut self, s: Submission) -> Result<(), MatchError> {
        let i = slot(s.role);
        let Some(c) = &self.commitments[i] else {
            return Err(MatchError::MissingCommitment(s.role));
        };
        if self.commitments.iter().any(Option::is_none) {
            return Err(MatchError::OpeningBeforeCommitments(s.role));
        }
        if self.openings[i].is_some() {
            return Err(MatchError::DuplicateOpening(s.role));
        }
        if !verify_opening(c, &s.program, &s.salt) {
            return Err(MatchError::CommitmentMismatch(s.role));
        }
        if s.bg_digest != self.bg_digest {
            return Err(MatchError::BgDigestMismatch(s.role));
        }
        let program = match self.disclosure {
            Disclosure::Private => OpenedProgram::Hash(Sha256::digest(s.program.bytes()).into()),
            Disclosure::Public => OpenedProgram::Full(s.program.clone()),
        };
        self.transcript.messages.push(Message::Open {
            role: s.role,
            salt: s.salt,
            program,
        });
        self.openings[i] = Some(s);
        Ok(())
    }

    /// Recomputes both costs and closes the transcript.
    pub fn finish(mut self) -> Result<MatchReport, MatchError> {
        let case = self.case;
        let mut costs = [Cost::Infinite; 2];
        let mut verified = [false; 2];
        let mut violations = Vec::new();
        for role in [Role::Plaintiff, Role::Defendant] {
            let i = slot(role);
            let s = self.openings[i]
                .as_ref()
                .ok_or(MatchError::MissingOpening(role))?;
            let c = self.commitments[i]
                .as_ref()
                .expect("openings imply commitments");
            let env = build_env(&case.bg, role == Role::Plaintiff, &case.x)?;
            let fuel = self.fuel_cap.min(c.claimed_fuel_bound);
            let report: CostReport = levin_cost(&s.program, &case.y, &case.relation, &env, fuel);
            let x_tape = case.bg.x_tape_id();
            if let (
                Role::Defendant,
                Status::Trap {
                    trap: TrapKind::UnmountedTape { tape },
                },
            ) = (role, report.status)
            {
                if tape as usize == x_tape {
                    violations.push(Violation::ForbiddenTapeAccess { role, tape });
                }
            }
            verified[i] = report.cost_bits == Cost::Finite(c.claimed_cost_bits);
            if !verified[i] {
                violations.push(Violation::ClaimMismatch {
                    role,
                    claimed_bits: c.claimed_cost_bits,
                    recomputed: report.cost_bits,
                });
            }
            costs[i] = report.cost_bits;
            self.transcript.messages.push(Message::Result {
                role,
                cost: report.cost_bits,
                steps: report.halt_steps,
                verified: verified[i],
            });
        }
        for v in &violations {
            self.transcript.messages.push(Message::Violation(v.clone()));
        }
        let dersim_bits = match (costs[0], costs[1]) {
            (Cost::Finite(p), Cost::Finite(r)) => Some(r as i64 - p as i64),
            _ => None,
        };
        self.transcript
            .messages
            .push(Message::Outcome { dersim_bits });
        Ok(MatchReport {
            c_p: costs[0],
            c_r: costs[1],
            dersim_bits,
            verified: Verified {
                plaintiff: verified[0],
                defendant: verified[1],
            },
            violations,
            transcript: self.transcript,
        })
    }
}

/// Runs a full match: both commitments, then both openings, then scoring.
pub fn run_match(
    case: &Case,
    plaintiff: (&Commitment, &Submission),
    defendant: (&Commitment, &Submission),
    fuel_cap: u64,
    disclosure: Disclosure,
) -> Result<MatchReport, MatchError> {
    let mut referee = Referee::new(case, fuel_cap, disclosure);
    referee.commit(plaintiff.0.clone())?;
    referee.commit(defendant.0.clone())?;
    referee.open(plaintiff.1.clone())?;
    referee.open(defendant.1.clone())?;
    referee.finish()
}
