#![allow(dead_code)]

pub mod oracle;
pub mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SALT_P: &str = "1111111111111111111111111111111111111111111111111111111111111111";
pub const SALT_R: &str = "2222222222222222222222222222222222222222222222222222222222222222";

pub struct Golden {
    pub name: &'static str,
    pub args: Vec<&'static str>,
    pub exit: i32,
}

fn g(name: &'static str, args: &[&'static str], exit: i32) -> Golden {
    Golden {
        name,
        args: args.to_vec(),
        exit,
    }
}

/// One or more invocations per subcommand, in both output modes.
pub fn goldens() -> Vec<Golden> {
    let match_run = [
        "match",
        "run",
        "tiny",
        "--plaintiff-commitment",
        "plaintiff.commit.json",
        "--plaintiff-program",
        "tiny/programs/plaintiff.dvm",
        "--plaintiff-salt",
        SALT_P,
        "--defendant-commitment",
        "defendant.commit.json",
        "--defendant-program",
        "tiny/programs/defendant.dvm",
        "--defendant-salt",
        SALT_R,
    ];
    let mut match_run_public = vec!["--json"];
    match_run_public.extend_from_slice(&match_run);
    match_run_public.extend_from_slice(&["--public", "--transcript", "transcript.bin"]);
    vec![
        g("vm_run", &["vm", "run", "halt.dvm"], 0),
        g(
            "vm_run_json",
            &[
                "--json",
                "vm",
                "run",
                "letter.dvm",
                "--tape",
                "0=tapes/long.bin",
                "--fuel",
                "2",
            ],
            0,
        ),
        g("usage_error", &["vm", "run"], 2),
        g(
            "cost",
            &[
                "cost",
                "letter.dvm",
                "--target",
                "letter.bin",
                "--env",
                "env.json",
            ],
            0,
        ),
        g(
            "cost_json",
            &[
                "--json",
                "cost",
                "halt.dvm",
                "--target",
                "letter.bin",
                "--env",
                "env.json",
                "--relation",
                "hamming:1",
            ],
            1,
        ),
        g("eval", &["eval", "literal_copy"], 0),
        g("eval_json", &["--json", "eval", "tiny"], 0),
        g("eval_strict_lint", &["eval", "gamed", "--strict-lint"], 3),
        g(
            "estimate_enumerate",
            &[
                "estimate",
                "enumerate",
                "--target",
                "pair.bin",
                "--env",
                "env.json",
                "--budget",
                "48",
            ],
            0,
        ),
        g(
            "estimate_enumerate_json",
            &[
                "--json",
                "estimate",
                "enumerate",
                "--target",
                "pair.bin",
                "--env",
                "env.json",
                "--budget",
                "40",
            ],
            1,
        ),
        g(
            "estimate_compress",
            &[
                "estimate",
                "compress",
                "--target",
                "prose.bin",
                "--env",
                "env.json",
            ],
            0,
        ),
        g(
            "estimate_compress_json",
            &[
                "--json",
                "estimate",
                "compress",
                "--target",
                "prose.bin",
                "--env",
                "empty_env.json",
                "--witness",
                "w.dvm",
            ],
            0,
        ),
        g(
            "estimate_dersim",
            &["estimate", "dersim", "tiny", "--budget", "51"],
            0,
        ),
        g(
            "estimate_dersim_json",
            &[
                "--json", "estimate", "dersim", "tiny", "--budget", "44", "--mode", "exact",
            ],
            1,
        ),
        g("case_validate", &["case", "validate", "tiny"], 0),
        g(
            "case_validate_json",
            &["--json", "case", "validate", "gamed", "--strict-lint"],
            3,
        ),
        g("case_builtin_list", &["case", "builtin", "--list"], 0),
        g(
            "case_builtin_emit_json",
            &[
                "--json",
                "case",
                "builtin",
                "--emit",
                "hash_shortcut",
                "out",
            ],
            0,
        ),
        g(
            "match_commit",
            &[
                "match",
                "commit",
                "--program",
                "letter.dvm",
                "--role",
                "plaintiff",
                "--salt",
                SALT_P,
                "--claimed-cost",
                "34",
            ],
            0,
        ),
        g(
            "match_open_json",
            &[
                "--json",
                "match",
                "open",
                "--commitment",
                "plaintiff.commit.json",
                "--program",
                "tiny/programs/plaintiff.dvm",
                "--salt",
                SALT_P,
            ],
            0,
        ),
        g(
            "match_open_mismatch",
            &[
                "match",
                "open",
                "--commitment",
                "plaintiff.commit.json",
                "--program",
                "tiny/programs/defendant.dvm",
                "--salt",
                SALT_P,
            ],
            3,
        ),
        g("match_run", &match_run, 0),
        Golden {
            name: "match_run_json",
            args: match_run_public,
            exit: 0,
        },
    ]
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A scratch copy of the golden inputs, so commands that write files do not
/// touch the source tree.
pub fn scratch_inputs() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&golden_dir().join("inputs"), dir.path());
    dir
}

pub fn dersim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dersim"))
}

/// Runs `args` in a fresh scratch copy of the inputs.
pub fn run_golden(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let dir = scratch_inputs();
    let mut cmd = dersim();
    cmd.current_dir(dir.path()).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}
