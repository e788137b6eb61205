//! Derivation similarity engine.
//!
//! Programs run on a small deterministic stack machine ([`vm`]); their
//! conditional Levin cost ([`cost`]) is the bytecode length in bits plus the
//! ceiling log of the halting time. The empirical game ([`dersim`]) compares
//! a plaintiff program that may read the original work with a defendant
//! program that may not. [`estimator`] bounds the optimal costs, [`casebook`]
//! ships synthetic case fixtures and [`protocol`] runs a commit-reveal match
//! in front of a referee.

pub mod asm;
pub mod casebook;
pub mod comparability;
pub mod cost;
pub mod dersim;
pub mod estimator;
pub mod protocol;
pub mod vm;

pub use comparability::ComparabilityRelation;
pub use cost::{levin_cost, Cost, CostReport};
pub use vm::{Program, TapeEnvironment};
