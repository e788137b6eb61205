//! `dersim` command-line tool.
//!
//! Exit codes: 0 success, 1 evaluation undefined (a side failed or no
//! witness was found), 2 usage or input error, 3 validation or lint failure.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use dersim_core::casebook::{
    builtin_case, load_case, write_case, Case, LoadError, Loaded, BUILTIN_NAMES,
};
use dersim_core::cost::DEFAULT_FUEL;
use dersim_core::dersim::{empirical_dersim, verdict, Role, DEFAULT_EPSILON};
use dersim_core::estimator::{
    compress, enumerate_min_cost_with, theoretical_dersim_with, BoundKind, BoundReport, DerSimMode,
    EstimateError, SearchOptions,
};
use dersim_core::protocol::{
    commit, run_match, verify_opening, Commitment, Disclosure, Submission, SALT_LEN,
};
use dersim_core::vm::{run, Status};
use dersim_core::{levin_cost, ComparabilityRelation, Program, TapeEnvironment};

use report::Report;

#[derive(Parser)]
#[command(name = "dersim", version, about = "Derivation similarity engine")]
struct Cli {
    /// Emit the machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the report to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run programs on the virtual machine.
    #[command(subcommand)]
    Vm(VmCommand),
    /// Conditional Levin cost of a program against a target.
    Cost(CostArgs),
    /// Empirical similarity of a case bundle using its shipped programs.
    Eval(EvalArgs),
    /// Bound optimal costs by search or compression.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Inspect and produce case bundles.
    #[command(subcommand)]
    Case(CaseCommand),
    /// Commit-reveal matches.
    #[command(subcommand)]
    Match(MatchCommand),
}

#[derive(Subcommand)]
enum VmCommand {
    Run {
        program: PathBuf,
        /// Mount FILE at tape ID. Ids must be dense from 0.
        #[arg(long = "tape", value_name = "ID=FILE", value_parser = parse_tape)]
        tapes: Vec<(u8, PathBuf)>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
}

#[derive(Args)]
struct TargetArgs {
    #[arg(long, value_name = "FILE")]
    target: PathBuf,
    /// JSON manifest listing tapes in mount order.
    #[arg(long, value_name = "FILE")]
    env: PathBuf,
    #[arg(long, default_value = "exact")]
    relation: ComparabilityRelation,
}

#[derive(Args)]
struct CostArgs {
    program: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
}

#[derive(Args)]
struct EvalArgs {
    case: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[arg(long)]
    strict_lint: bool,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum EstimateCommand {
    /// Exact minimum cost by exhaustive search up to a budget.
    Enumerate {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        budget: u64,
        /// Search on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Upper bound from a self-extracting compressed program.
    Compress {
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        #[arg(long, value_name = "FILE")]
        env: PathBuf,
        /// Where to write the witness program; defaults to the target path
        /// with a `.dvm` extension.
        #[arg(long, value_name = "FILE")]
        witness: Option<PathBuf>,
    },
    /// Bounds on the similarity gap for a case bundle.
    Dersim {
        case: PathBuf,
        #[arg(long)]
        budget: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Auto,
    Exact,
    Heuristic,
}

#[derive(Subcommand)]
enum CaseCommand {
    /// Load a bundle and report lint findings.
    Validate {
        case: PathBuf,
        #[arg(long)]
        strict_lint: bool,
    },
    /// List or emit the built-in synthetic cases.
    Builtin {
        #[arg(long, conflicts_with = "emit", required_unless_present = "emit")]
        list: bool,
        #[arg(long, value_name = "NAME", requires = "dir")]
        emit: Option<String>,
        dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Plaintiff,
    Defendant,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::Plaintiff => Role::Plaintiff,
            RoleArg::Defendant => Role::Defendant,
        }
    }
}

#[derive(Subcommand)]
enum MatchCommand {
    /// Commit to a program.
    Commit {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum)]
        role: RoleArg,
        /// 32-byte salt as hex.
        #[arg(long, value_parser = parse_salt)]
        salt: [u8; SALT_LEN],
        #[arg(long)]
        claimed_cost: u64,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel_bound: u64,
    },
    /// Check that a program and salt open a commitment.
    Open {
        #[arg(long)]
        commitment: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_parser = parse_salt)]
        salt: [u8; SALT_LEN],
    },
    /// Referee a full match on a case bundle.
    Run(MatchRunArgs),
}

#[derive(Args)]
struct MatchRunArgs {
    case: PathBuf,
    #[arg(long)]
    plaintiff_commitment: PathBuf,
    #[arg(long)]
    plaintiff_program: PathBuf,
    #[arg(long, value_parser = parse_salt)]
    plaintiff_salt: [u8; SALT_LEN],
    #[arg(long)]
    defendant_commitment: PathBuf,
    #[arg(long)]
    defendant_program: PathBuf,
    #[arg(long, value_parser = parse_salt)]
    defendant_salt: [u8; SALT_LEN],
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Disclose programs in the transcript.
    #[arg(long)]
    public: bool,
    /// Also write the binary transcript to FILE.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
}

fn parse_tape(s: &str) -> Result<(u8, PathBuf), String> {
    let (id, file) = s.split_once('=').ok_or("expected ID=FILE")?;
    let id = id.parse().map_err(|e| format!("bad tape id {id:?}: {e}"))?;
    Ok((id, PathBuf::from(file)))
}

fn parse_salt(s: &str) -> Result<[u8; SALT_LEN], String> {
    let mut salt = [0; SALT_LEN];
    hex::decode_to_slice(s, &mut salt)
        .map_err(|e| format!("salt must be {} hex digits: {e}", 2 * SALT_LEN))?;
    Ok(salt)
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::LintFailure(_) => CliError::Validation(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

struct Outcome {
    report: Report,
    code: u8,
}

impl Outcome {
    fn ok(report: Report) -> Outcome {
        Outcome { report, code: 0 }
    }

    fn with_code(report: Report, undefined: bool) -> Outcome {
        Outcome {
            report,
            code: undefined as u8,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))
}

fn read_program(path: &Path) -> Result<Program, CliError> {
    Program::decode(read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// `{"tapes": ["file", ...]}`; paths are relative to the manifest.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvManifest {
    tapes: Vec<String>,
}

fn read_env(path: &Path) -> Result<TapeEnvironment, CliError> {
    let m: EnvManifest = serde_json::from_slice(&read(path)?)
        .map_err(|e| CliError::Usage(format!("env manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let tapes = m
        .tapes
        .iter()
        .map(|t| read(&base.join(t)))
        .collect::<Result<Vec<_>, _>>()?;
    TapeEnvironment::new(tapes).map_err(|e| CliError::Usage(e.to_string()))
}

fn load(dir: &Path, strict: bool) -> Result<Loaded, CliError> {
    Ok(load_case(dir, strict)?)
}

fn case_program(case: &Case, role: Role) -> Result<&Program, CliError> {
    let p = match role {
        Role::Plaintiff => &case.plaintiff_program,
        Role::Defendant => &case.defendant_program,
    };
    p.as_ref()
        .ok_or_else(|| CliError::Usage(format!("case {} ships no {role} program", case.name)))
}

fn read_commitment(path: &Path) -> Result<Commitment, CliError> {
    let bad = |e: serde_json::Error| CliError::Usage(format!("commitment {}: {e}", path.display()));
    let mut v: serde_json::Value = serde_json::from_slice(&read(path)?).map_err(bad)?;
    if let Some(inner) = v.pointer_mut("/payload/commitment") {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(bad)
}

fn options(serial: bool) -> SearchOptions {
    SearchOptions { parallel: !serial }
}

fn estimate_outcome(
    argv: &[String],
    name: &'static str,
    result: Result<serde_json::Value, EstimateError>,
) -> Result<Outcome, CliError> {
    match result {
        Ok(payload) => Ok(Outcome::ok(Report::new(name, argv, payload))),
        Err(e @ EstimateError::NoWitnessWithinBudget { .. }) => Ok(Outcome::with_code(
            Report::new(name, argv, json!({ "error": e.to_string() })),
            true,
        )),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

fn execute(cli: Cli, argv: &[String]) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Vm(VmCommand::Run {
            program,
            mut tapes,
            fuel,
        }) => {
            let program = read_program(&program)?;
            tapes.sort_by_key(|(id, _)| *id);
            if tapes
                .iter()
                .enumerate()
                .any(|(i, (id, _))| *id as usize != i)
            {
                return Err(CliError::Usage("tape ids must be dense from 0".into()));
            }
            let contents = tapes
                .iter()
                .map(|(_, f)| read(f))
                .collect::<Result<Vec<_>, _>>()?;
            let env = TapeEnvironment::new(contents).map_err(|e| CliError::Usage(e.to_string()))?;
            let r = run(&program, &env, fuel);
            #[derive(Serialize)]
            struct VmRun {
                program_bits: u64,
                fuel: u64,
                #[serde(flatten)]
                status: Status,
                steps: u64,
                output_len: Option<usize>,
                output: Option<String>,
            }
            let payload = VmRun {
                program_bits: program.bit_len(),
                fuel,
                status: r.status,
                steps: r.steps,
                output_len: r.output.as_ref().map(Vec::len),
                output: r.output.as_ref().map(hex::encode),
            };
            Ok(Outcome::ok(Report::new("vm run", argv, payload)))
        }
        Command::Cost(a) => {
            let program = read_program(&a.program)?;
            let y = read(&a.target.target)?;
            let env = read_env(&a.target.env)?;
            let r = levin_cost(&program, &y, &a.target.relation, &env, a.fuel);
            let undefined = !r.cost_bits.is_finite();
            Ok(Outcome::with_code(Report::new("cost", argv, r), undefined))
        }
        Command::Eval(a) => {
            let Loaded { case, lints } = load(&a.case, false)?;
            if a.strict_lint && !lints.is_empty() {
                let payload = json!({ "case": case.name, "lints": lints });
                return Ok(Outcome {
                    report: Report::new("eval", argv, payload),
                    code: 3,
                });
            }
            let p = case_program(&case, Role::Plaintiff)?;
            let r = case_program(&case, Role::Defendant)?;
            let report = empirical_dersim(&case.x, &case.y, p, r, &case.bg, &case.relation, a.fuel)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let summary = verdict(&report, a.epsilon);
            let undefined = report.dersim_bits.is_none();
            let payload = json!({
                "case": case.name,
                "relation": case.relation,
                "fuel": a.fuel,
                "lints": lints,
                "verdict": summary,
                "report": report,
            });
            Ok(Outcome::with_code(
                Report::new("eval", argv, payload),
                undefined,
            ))
        }
        Command::Estimate(EstimateCommand::Enumerate {
            target,
            budget,
            serial,
        }) => {
            let y = read(&target.target)?;
            let env = read_env(&target.env)?;
            let result =
                enumerate_min_cost_with(&y, &target.relation, &env, budget, options(serial))
                    .map(|b| json!({ "relation": target.relation, "bound": b }));
            estimate_outcome(argv, "estimate enumerate", result)
        }
        Command::Estimate(EstimateCommand::Compress {
            target,
            env,
            witness,
        }) => {
            let y = read(&target)?;
            let tapes = read_env(&env)?;
            let c = compress(&y, &tapes);
            let value_bits = c
                .report
                .cost_bits
                .finite()
                .expect("compressed programs reproduce their target");
            let bound = BoundReport {
                kind: BoundKind::UpperBound,
                value_bits,
                witness_program: c.program.clone(),
                witness_steps: c.report.halt_steps,
                budget_bits: value_bits,
                exhaustive: false,
            };
            let witness = witness.unwrap_or_else(|| target.with_extension("dvm"));
            fs::write(&witness, c.program.bytes())
                .map_err(|e| CliError::Usage(format!("writing {}: {e}", witness.display())))?;
            let payload = json!({
                "bound": bound,
                "token_count": c.tokens.len(),
                "witness_file": witness.display().to_string(),
            });
            Ok(Outcome::ok(Report::new("estimate compress", argv, payload)))
        }
        Command::Estimate(EstimateCommand::Dersim {
            case,
            budget,
            mode,
            serial,
        }) => {
            let case = load(&case, false)?.case;
            let core_mode = match mode {
                ModeArg::Auto => DerSimMode::Auto,
                ModeArg::Exact => DerSimMode::ExactOnly,
                ModeArg::Heuristic => DerSimMode::HeuristicOnly,
            };
            let result = theoretical_dersim_with(
                &case.x,
                &case.y,
                &case.bg,
                &case.relation,
                budget,
                core_mode,
                options(serial),
            )
            .map(|b| json!({ "case": case.name, "mode": mode, "bounds": b }));
            estimate_outcome(argv, "estimate dersim", result)
        }
        Command::Case(CaseCommand::Validate { case, strict_lint }) => {
            let Loaded { case, lints } = load(&case, false)?;
            let code = if strict_lint && !lints.is_empty() {
                3
            } else {
                0
            };
            let payload = json!({ "case": case.name, "clean": lints.is_empty(), "lints": lints });
            Ok(Outcome {
                report: Report::new("case validate", argv, payload),
                code,
            })
        }
        Command::Case(CaseCommand::Builtin { list: true, .. }) => Ok(Outcome::ok(Report::new(
            "case builtin",
            argv,
            json!({ "builtin": BUILTIN_NAMES }),
        ))),
        Command::Case(CaseCommand::Builtin { emit, dir, .. }) => {
            let (Some(name), Some(dir)) = (emit, dir) else {
                return Err(CliError::Usage(
                    "--emit needs a case name and a directory".into(),
                ));
            };
            let case = builtin_case(&name)
                .ok_or_else(|| CliError::Usage(format!("no built-in case {name:?}")))?;
            write_case(&case, &dir)
                .map_err(|e| CliError::Usage(format!("writing {}: {e}", dir.display())))?;
            let payload = json!({ "emitted": name, "dir": dir.display().to_string() });
            Ok(Outcome::ok(Report::new("case builtin", argv, payload)))
        }
        Command::Match(MatchCommand::Commit {
            program,
            role,
            salt,
            claimed_cost,
            fuel_bound,
        }) => {
            let program = read_program(&program)?;
            let c = commit(&program, &salt, role.into(), claimed_cost, fuel_bound);
            Ok(Outcome::ok(Report::new(
                "match commit",
                argv,
                json!({ "commitment": c }),
            )))
        }
        Command::Match(MatchCommand::Open {
            commitment,
            program,
            salt,
        }) => {
            let c = read_commitment(&commitment)?;
            let program = read_program(&program)?;
            let opens = verify_opening(&c, &program, &salt);
            let payload = json!({ "role": c.role, "opens": opens });
            Ok(Outcome {
                report: Report::new("match open", argv, payload),
                code: if opens { 0 } else { 3 },
            })
        }
        Command::Match(MatchCommand::Run(a)) => {
            let case = load(&a.case, false)?.case;
            let bg_digest = case.bg.digest();
            let side =
                |c: &Path, p: &Path, salt: [u8; SALT_LEN], role: Role| -> Result<_, CliError> {
                    let commitment = read_commitment(c)?;
                    if commitment.role != role {
                        return Err(CliError::Usage(format!(
                            "{} is a {} commitment",
                            c.display(),
                            commitment.role
                        )));
                    }
                    let submission = Submission {
                        role,
                        program: read_program(p)?,
                        salt,
                        bg_digest,
                    };
                    Ok((commitment, submission))
                };
            let (pc, ps) = side(
                &a.plaintiff_commitment,
                &a.plaintiff_program,
                a.plaintiff_salt,
                Role::Plaintiff,
            )?;
            let (dc, ds) = side(
                &a.defendant_commitment,
                &a.defendant_program,
                a.defendant_salt,
                Role::Defendant,
            )?;
            let disclosure = if a.public {
                Disclosure::Public
            } else {
                Disclosure::Private
            };
            let report = run_match(&case, (&pc, &ps), (&dc, &ds), a.fuel, disclosure)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(path) = &a.transcript {
                fs::write(path, report.transcript.to_bytes())
                    .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?;
            }
            let undefined = report.dersim_bits.is_none();
            let payload = json!({ "case": case.name, "match": report });
            Ok(Outcome::with_code(
                Report::new("match run", argv, payload),
                undefined,
            ))
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let (json_mode, out) = (cli.json, cli.out.clone());
    let outcome = match execute(cli, &argv) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Validation(_) => 3,
            });
        }
    };
    let text = if json_mode {
        outcome.report.to_json()
    } else {
        outcome.report.to_text()
    };
    let written = match &out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| format!("writing {}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.code)
}
