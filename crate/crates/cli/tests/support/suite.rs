//! Twenty small targets for cross-checking exact search. Each entry splits
//! its tapes into background (mounted first) and `x` (mounted last).

use dersim_core::ComparabilityRelation;

pub struct Micro {
    pub name: &'static str,
    pub context: Vec<Vec<u8>>,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub relation: ComparabilityRelation,
    pub budget: u64,
}

impl Micro {
    pub fn env_bg(&self) -> Vec<Vec<u8>> {
        self.context.clone()
    }

    pub fn env_bg_x(&self) -> Vec<Vec<u8>> {
        let mut t = self.context.clone();
        t.push(self.x.clone());
        t
    }
}

fn m(
    name: &'static str,
    context: Vec<Vec<u8>>,
    x: &[u8],
    y: &[u8],
    relation: &str,
    budget: u64,
) -> Micro {
    Micro {
        name,
        context,
        x: x.to_vec(),
        y: y.to_vec(),
        relation: relation.parse().unwrap(),
        budget,
    }
}

pub fn micro_suite() -> Vec<Micro> {
    vec![
        m("empty", vec![], b"", b"", "exact", 16),
        m("single_letter", vec![], b"A", b"A", "exact", 40),
        m("two_letters", vec![], b"AB", b"AB", "exact", 48),
        m("zero_byte", vec![], &[0], &[0], "exact", 40),
        m(
            "context_length_pair",
            vec![vec![0; 0x0102]],
            &[9],
            &[2, 1],
            "exact",
            48,
        ),
        m("x_length_pair", vec![], &[0; 0x0201], &[1, 2], "exact", 48),
        m(
            "any_two_bytes",
            vec![vec![1, 2, 3]],
            b"",
            b"ab",
            "hamming:2",
            48,
        ),
        m("any_one_byte", vec![], b"", b"Z", "hamming:1", 40),
        m("one_from_length", vec![vec![5]], b"", &[1], "exact", 40),
        m(
            "read_would_be_long",
            vec![b"Quill".to_vec()],
            b"",
            b"Q",
            "exact",
            44,
        ),
        m("repeated_byte", vec![], &[7, 7], &[7, 7], "exact", 48),
        m(
            "length_low_byte",
            vec![vec![0; 3]],
            b"",
            &[3, 0],
            "exact",
            48,
        ),
        m(
            "x_length_only",
            vec![vec![0; 4]],
            &[0; 5],
            &[5, 0],
            "exact",
            48,
        ),
        m("empty_tape_zeros", vec![vec![]], b"", &[0, 0], "exact", 48),
        m(
            "three_bytes_loose",
            vec![vec![1]],
            b"",
            b"xyz",
            "hamming:2",
            48,
        ),
        m("empty_with_tapes", vec![vec![1, 2]], &[3], b"", "exact", 24),
        m("just_below", vec![], b"", &[0xFF], "exact", 33),
        m("exact_budget", vec![], b"", b"A", "exact", 34),
        m("hamming_zero", vec![], b"A", b"A", "hamming:0", 40),
        m(
            "letter_and_zero",
            vec![vec![0; 0x41]],
            b"",
            &[0x41, 0],
            "exact",
            48,
        ),
    ]
}
