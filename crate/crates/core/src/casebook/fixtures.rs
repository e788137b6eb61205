//! Seeded synthetic cases. Generation uses only integer operations on a
//! ChaCha8 stream, so every platform produces identical bytes.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{copy_program, literal_program};
use crate::dersim::{build_env, Background, Band};
use crate::estimator::{compress_to_program, mix8};

use super::{Case, Expected};

pub const BUILTIN_NAMES: [&str; 7] = [
    "feist_synth",
    "baker_synth",
    "bee_synth",
    "altai_synth",
    "literal_copy",
    "hash_shortcut",
    "dictionary_index",
];

const NEGLIGIBLE: Expected = Expected {
    band: Band::Negligible,
    threshold_bits: Some(64),
};

struct Gen(ChaCha8Rng);

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    fn below(&mut self, n: u32) -> u32 {
        self.0.next_u32() % n
    }

    fn bytes(&mut self, n: usize) -> Vec<u8> {
        let mut v = vec![0; n];
        self.0.fill_bytes(&mut v);
        v
    }

    fn upper(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| b'A' + self.below(26) as u8).collect()
    }

    fn digits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| b'0' + self.below(10) as u8).collect()
    }

    /// Lowercase letters and spaces.
    fn prose(&mut self, n: usize) -> Vec<u8> {
        (0..n)
            .map(|_| match self.below(27) {
                26 => b' ',
                c => b'a' + c as u8,
            })
            .collect()
    }
}

/// Fills in both parties' programs by compressing `y` in each environment.
fn with_compressed_programs(mut case: Case) -> Case {
    let env_px = build_env(&case.bg, true, &case.x).expect("fixture tapes fit");
    let env_bg = build_env(&case.bg, false, &case.x).expect("fixture tapes fit");
    case.plaintiff_program = Some(compress_to_program(&case.y, &env_px).0);
    case.defendant_program = Some(compress_to_program(&case.y, &env_bg).0);
    case
}

/// Directory of 4096 sorted 14-byte records (8-letter name, 6-digit number)
/// in the context; the original work lists an alphabetised subset plus a
/// few fictitious marker records, which are background for the original
/// only. The accused work reprints part of that listing under its own
/// header.
fn feist_synth() -> Case {
    const SEED: u64 = 1;
    const RECORD: usize = 14;
    let mut g = Gen::new(SEED);
    let mut directory: Vec<Vec<u8>> = (0..4096)
        .map(|_| [g.upper(8), g.digits(6)].concat())
        .collect();
    directory.sort();
    let known: BTreeSet<&Vec<u8>> = directory.iter().collect();

    let mut listing: Vec<Vec<u8>> = directory
        .iter()
        .filter(|_| g.below(8) == 0)
        .cloned()
        .collect();
    let mut markers = 0;
    while markers < 4 {
        let fake = [g.upper(8), g.digits(6)].concat();
        if !known.contains(&fake) {
            listing.push(fake);
            markers += 1;
        }
    }
    listing.sort();
    let listing_bytes = listing.concat();
    debug_assert_eq!(listing_bytes.len() % RECORD, 0);

    let x = [g.prose(256), listing_bytes.clone()].concat();
    let mut y = g.prose(96);
    for record in listing.iter().take(240) {
        if g.below(4) != 0 {
            y.extend_from_slice(record);
        }
    }
    with_compressed_programs(Case {
        seed: Some(SEED),
        x,
        y,
        bg: Background {
            noncopy_x: vec![listing_bytes],
            noncopy_y: vec![],
            context: vec![directory.concat()],
        },
        expected: Some(NEGLIGIBLE),
        ..Case::named("feist_synth")
    })
}

/// Both works explain the same bookkeeping method (background) in their own
/// prose; blank ledger forms sit in the context.
fn baker_synth() -> Case {
    const SEED: u64 = 2;
    let mut g = Gen::new(SEED);
    let method = g.prose(1200);
    let forms = g.prose(200);
    let x = [g.prose(600), method.clone(), g.prose(400)].concat();
    let y = [g.prose(500), method.clone(), g.prose(300)].concat();
    with_compressed_programs(Case {
        seed: Some(SEED),
        x,
        y,
        bg: Background {
            noncopy_x: vec![method],
            noncopy_y: vec![],
            context: vec![forms],
        },
        expected: Some(NEGLIGIBLE),
        ..Case::named("baker_synth")
    })
}

/// Two catalogues of 8-byte jewel arrangements sharing exactly one record.
fn bee_synth() -> Case {
    const SEED: u64 = 3;
    const RECORDS: usize = 64;
    let mut g = Gen::new(SEED);
    let jewel = |g: &mut Gen| [vec![b'A' + g.below(16) as u8], g.upper(7)].concat();
    let x_records: Vec<Vec<u8>> = (0..RECORDS).map(|_| jewel(&mut g)).collect();
    let mut y_records: Vec<Vec<u8>> = Vec::new();
    while y_records.len() < RECORDS - 1 {
        let r = jewel(&mut g);
        if !x_records.contains(&r) {
            y_records.push(r);
        }
    }
    let shared = g.below(RECORDS as u32) as usize;
    let at = g.below(RECORDS as u32) as usize;
    y_records.insert(at, x_records[shared].clone());
    with_compressed_programs(Case {
        seed: Some(SEED),
        x: x_records.concat(),
        y: y_records.concat(),
        expected: Some(NEGLIGIBLE),
        ..Case::named("bee_synth")
    })
}

/// The accused program is assembled from a public interface specification
/// (context) and standard routines the original also used (background), plus
/// a little glue.
fn altai_synth() -> Case {
    const SEED: u64 = 4;
    let mut g = Gen::new(SEED);
    let interface = g.prose(1500);
    let routines = g.prose(900);
    let x = [g.prose(700), routines.clone(), g.prose(500)].concat();
    let y = [
        &interface[100..400],
        &g.prose(24),
        &routines[..300],
        &g.prose(24),
        &interface[800..1200],
        &g.prose(24),
        &routines[500..900],
    ]
    .concat();
    with_compressed_programs(Case {
        seed: Some(SEED),
        x,
        y,
        bg: Background {
            noncopy_x: vec![routines],
            noncopy_y: vec![],
            context: vec![interface],
        },
        expected: Some(NEGLIGIBLE),
        ..Case::named("altai_synth")
    })
}

/// Verbatim copy of 1 KiB of high-entropy bytes with no background.
fn literal_copy() -> Case {
    const SEED: u64 = 5;
    let x = Gen::new(SEED).bytes(1024);
    Case {
        seed: Some(SEED),
        y: x.clone(),
        plaintiff_program: Some(copy_program(0)),
        defendant_program: Some(literal_program(&x)),
        x,
        expected: Some(Expected {
            band: Band::NearTotal,
            threshold_bits: Some(7373),
        }),
        ..Case::named("literal_copy")
    }
}

/// A 4-byte target with its 8-bit digest in the context.
fn hash_shortcut() -> Case {
    const SEED: u64 = 6;
    let x = Gen::new(SEED).bytes(4);
    Case {
        seed: Some(SEED),
        y: x.clone(),
        bg: Background {
            context: vec![vec![mix8(&x)]],
            ..Background::default()
        },
        x,
        ..Case::named("hash_shortcut")
    }
}

/// 32 words drawn from a 1024-word list in the context, one per line.
fn dictionary_index() -> Case {
    const SEED: u64 = 7;
    let mut g = Gen::new(SEED);
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    while words.len() < 1024 {
        let len = 5 + g.below(4) as usize;
        let w = g
            .prose(len)
            .into_iter()
            .map(|c| if c == b' ' { b'e' } else { c })
            .collect::<Vec<u8>>();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    let list: Vec<u8> = words
        .iter()
        .flat_map(|w| w.iter().copied().chain(*b"\n"))
        .collect();
    let y: Vec<u8> = (0..32)
        .flat_map(|_| {
            words[g.below(1024) as usize]
                .iter()
                .copied()
                .chain(*b"\n")
                .collect::<Vec<_>>()
        })
        .collect();
    Case {
        seed: Some(SEED),
        x: y.clone(),
        y,
        bg: Background {
            context: vec![list],
            ..Background::default()
        },
        ..Case::named("dictionary_index")
    }
}

pub fn builtin_case(name: &str) -> Option<Case> {
    Some(match name {
        "feist_synth" => feist_synth(),
        "baker_synth" => baker_synth(),
        "bee_synth" => bee_synth(),
        "altai_synth" => altai_synth(),
        "literal_copy" => literal_copy(),
        "hash_shortcut" => hash_shortcut(),
        "dictionary_index" => dictionary_index(),
        _ => return None,
    })
}

pub fn builtin_cases() -> Vec<Case> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin_case(n).expect("listed names exist"))
        .collect()
}
