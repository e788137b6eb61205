//! Shared inputs for the criterion benchmarks.

use dersim_core::casebook::{builtin_case, Case};
use dersim_core::cost::copy_program;
use dersim_core::{Program, TapeEnvironment};

pub fn case(name: &str) -> Case {
    builtin_case(name).expect("built-in case exists")
}

/// The copy program with one tape of `len` high-entropy bytes mounted.
pub fn copy_workload(len: usize) -> (Program, TapeEnvironment, Vec<u8>) {
    let seed = case("literal_copy").x;
    let tape: Vec<u8> = seed.iter().copied().cycle().take(len).collect();
    let env = TapeEnvironment::new([&tape]).expect("tape fits");
    (copy_program(0), env, tape)
}

/// `(label, target, environment, budget)` for exact search.
pub fn enumeration_targets() -> Vec<(&'static str, Vec<u8>, TapeEnvironment, u64)> {
    let long = TapeEnvironment::new([vec![0u8; 0x0102]]).expect("tape fits");
    vec![
        ("letter_40", b"A".to_vec(), TapeEnvironment::empty(), 40),
        ("length_pair_48", vec![2, 1], long, 48),
        (
            "unreachable_48",
            b"AB".to_vec(),
            TapeEnvironment::empty(),
            48,
        ),
    ]
}
