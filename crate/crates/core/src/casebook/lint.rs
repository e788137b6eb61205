//! Advisory checks for cases whose context looks gamed.

use std::fmt;

use serde::Serialize;

use crate::comparability::check_reflexive;
use crate::vm::MAX_TAPE_LEN;

use super::Case;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "lint", rename_all = "snake_case")]
pub enum Lint {
    /// `y` occurs verbatim inside a context tape.
    ContextContainsTarget {
        context: usize,
    },
    /// Two equal-length context tapes XOR to `y`.
    XorPairReconstruction {
        first: usize,
        second: usize,
    },
    /// Two equal-length context tapes add (or subtract) bytewise to `y`.
    AdditivePairReconstruction {
        first: usize,
        second: usize,
    },
    /// A component that gets mounted as a tape is too long to address.
    OversizeTape {
        component: String,
        len: usize,
    },
    RelationNotReflexive {
        sample_len: usize,
    },
}

impl fmt::Display for Lint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lint::ContextContainsTarget { context } => {
                write!(f, "context tape {context} contains y verbatim")
            }
            Lint::XorPairReconstruction { first, second } => {
                write!(f, "context tapes {first} and {second} XOR to y")
            }
            Lint::AdditivePairReconstruction { first, second } => {
                write!(
                    f,
                    "context tapes {first} and {second} combine additively to y"
                )
            }
            Lint::OversizeTape { component, len } => {
                write!(f, "{component} is {len} bytes, limit is {MAX_TAPE_LEN}")
            }
            Lint::RelationNotReflexive { sample_len } => {
                write!(f, "relation is not reflexive on a {sample_len}-byte sample")
            }
        }
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn combine(a: &[u8], b: &[u8], y: &[u8], f: impl Fn(u8, u8) -> u8) -> bool {
    a.iter().zip(b).zip(y).all(|((&a, &b), &y)| f(a, b) == y)
}

pub fn validate_case(case: &Case) -> Vec<Lint> {
    let mut lints = Vec::new();
    let y = &case.y;
    let ctx = &case.bg.context;

    for (i, tape) in ctx.iter().enumerate() {
        if contains(tape, y) {
            lints.push(Lint::ContextContainsTarget { context: i });
        }
    }
    if !y.is_empty() {
        for i in 0..ctx.len() {
            for j in i + 1..ctx.len() {
                let (a, b) = (&ctx[i], &ctx[j]);
                if a.len() != y.len() || b.len() != y.len() {
                    continue;
                }
                if combine(a, b, y, |a, b| a ^ b) {
                    lints.push(Lint::XorPairReconstruction {
                        first: i,
                        second: j,
                    });
                } else if combine(a, b, y, u8::wrapping_add)
                    || combine(a, b, y, u8::wrapping_sub)
                    || combine(b, a, y, u8::wrapping_sub)
                {
                    lints.push(Lint::AdditivePairReconstruction {
                        first: i,
                        second: j,
                    });
                }
            }
        }
    }

    let lists = [
        ("noncopy_x", &case.bg.noncopy_x),
        ("noncopy_y", &case.bg.noncopy_y),
        ("context", &case.bg.context),
    ];
    let oversize = std::iter::once(("x".to_string(), case.x.len()))
        .chain(lists.into_iter().flat_map(|(n, l)| {
            l.iter()
                .enumerate()
                .map(move |(i, t)| (format!("{n}[{i}]"), t.len()))
        }))
        .filter(|(_, len)| *len > MAX_TAPE_LEN);
    lints.extend(oversize.map(|(component, len)| Lint::OversizeTape { component, len }));

    let samples: [&[u8]; 3] = [&case.x, &case.y, b""];
    for check in check_reflexive(&case.relation, &samples) {
        if !check.passed {
            lints.push(Lint::RelationNotReflexive {
                sample_len: check.sample_len,
            });
        }
    }
    lints
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dersim::Background;

    fn case_with_context(y: &[u8], context: Vec<Vec<u8>>) -> Case {
        Case {
            y: y.to_vec(),
            bg: Background {
                context,
                ..Default::default()
            },
            ..Case::named("lint")
        }
    }

    #[test]
    fn xor_shares_are_flagged() {
        let y = b"the disputed work".to_vec();
        let r: Vec<u8> = (0..y.len() as u8)
            .map(|i| i.wrapping_mul(97) ^ 0x5C)
            .collect();
        let share: Vec<u8> = y.iter().zip(&r).map(|(a, b)| a ^ b).collect();
        let lints = validate_case(&case_with_context(&y, vec![b"filler".to_vec(), share, r]));
        assert_eq!(
            lints,
            vec![Lint::XorPairReconstruction {
                first: 1,
                second: 2
            }]
        );
    }

    #[test]
    fn additive_shares_are_flagged() {
        let y = b"abcdef".to_vec();
        let r = vec![200u8, 1, 2, 3, 4, 250];
        let share: Vec<u8> = y.iter().zip(&r).map(|(a, b)| a.wrapping_sub(*b)).collect();
        let lints = validate_case(&case_with_context(&y, vec![r, share]));
        assert_eq!(
            lints,
            vec![Lint::AdditivePairReconstruction {
                first: 0,
                second: 1
            }]
        );
    }

    #[test]
    fn verbatim_context_is_flagged() {
        let lints = validate_case(&case_with_context(
            b"needle",
            vec![b"hay needle hay".to_vec()],
        ));
        assert_eq!(lints, vec![Lint::ContextContainsTarget { context: 0 }]);
    }

    #[test]
    fn unrelated_dictionary_is_clean() {
        let words = b"apple\nbanana\ncherry\n".to_vec();
        assert!(validate_case(&case_with_context(b"grape", vec![words])).is_empty());
    }

    #[test]
    fn oversize_tapes_are_reported() {
        let lints = validate_case(&case_with_context(b"y", vec![vec![0; MAX_TAPE_LEN + 1]]));
        assert_eq!(
            lints,
            vec![Lint::OversizeTape {
                component: "context[0]".into(),
                len: MAX_TAPE_LEN + 1
            }]
        );
    }

    #[test]
    fn sixteen_tapes_check_quickly() {
        let y = vec![7u8; 4096];
        let mut ctx: Vec<Vec<u8>> = (0..16u8).map(|i| vec![0x40 | i; 4096]).collect();
        ctx[14] = vec![0x13; 4096];
        ctx[15] = vec![0x13 ^ 7; 4096];
        let start = std::time::Instant::now();
        let lints = validate_case(&case_with_context(&y, ctx));
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(lints.contains(&Lint::XorPairReconstruction {
            first: 14,
            second: 15
        }));
    }
}
