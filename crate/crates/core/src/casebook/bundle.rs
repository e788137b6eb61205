use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparability::ComparabilityRelation;
use crate::dersim::Background;
use crate::vm::{Program, MAX_OUTPUT_LEN, MAX_TAPE_LEN};

use super::{validate_case, Case, Expected, Lint};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaintiff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defendant: Option<String>,
}

/// `manifest.json`. File references are relative to the bundle directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub relation: ComparabilityRelation,
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub noncopy_x: Vec<String>,
    #[serde(default)]
    pub noncopy_y: Vec<String>,
    #[serde(default)]
    pub context: Vec<String>,
    #[serde(default)]
    pub programs: ProgramFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("{component} is {len} bytes, limit is {limit}")]
    OversizeTape {
        component: String,
        len: usize,
        limit: usize,
    },
    #[error("lint failed: {}", .0.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("; "))]
    LintFailure(Vec<Lint>),
    #[error("reading {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

/// A loaded case and its (advisory) lint findings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub case: Case,
    pub lints: Vec<Lint>,
}

fn read(dir: &Path, rel: &str) -> Result<Vec<u8>, LoadError> {
    let rel_path = Path::new(rel);
    if rel_path
        .components()
        .any(|c| !matches!(c, Component::Normal(_)))
    {
        return Err(LoadError::BadManifest(format!(
            "file reference {rel:?} must stay inside the bundle"
        )));
    }
    let path = dir.join(rel_path);
    fs::read(&path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => LoadError::MissingFile(path.clone()),
        _ => LoadError::Io {
            path: path.clone(),
            source,
        },
    })
}

fn read_tape(dir: &Path, rel: &str, component: String) -> Result<Vec<u8>, LoadError> {
    let bytes = read(dir, rel)?;
    if bytes.len() > MAX_TAPE_LEN {
        return Err(LoadError::OversizeTape {
            component,
            len: bytes.len(),
            limit: MAX_TAPE_LEN,
        });
    }
    Ok(bytes)
}

fn read_program(dir: &Path, rel: &Option<String>) -> Result<Option<Program>, LoadError> {
    rel.as_deref()
        .map(|rel| {
            Program::decode(read(dir, rel)?)
                .map_err(|e| LoadError::BadManifest(format!("program {rel:?}: {e}")))
        })
        .transpose()
}

/// Loads a bundle and lints it. With `strict`, any lint finding is an error.
pub fn load_case(dir: &Path, strict: bool) -> Result<Loaded, LoadError> {
    let raw = read(dir, "manifest.json")?;
    let m: Manifest =
        serde_json::from_slice(&raw).map_err(|e| LoadError::BadManifest(e.to_string()))?;

    let x = read_tape(dir, &m.x, "x".into())?;
    let y = read(dir, &m.y)?;
    if y.len() > MAX_OUTPUT_LEN {
        return Err(LoadError::BadManifest(format!(
            "y is {} bytes, output limit is {MAX_OUTPUT_LEN}",
            y.len()
        )));
    }
    let list = |name: &str, files: &[String]| -> Result<Vec<Vec<u8>>, LoadError> {
        files
            .iter()
            .enumerate()
            .map(|(i, f)| read_tape(dir, f, format!("{name}[{i}]")))
            .collect()
    };
    let bg = Background {
        noncopy_x: list("noncopy_x", &m.noncopy_x)?,
        noncopy_y: list("noncopy_y", &m.noncopy_y)?,
        context: list("context", &m.context)?,
    };
    if bg.tape_count() >= 256 {
        return Err(LoadError::BadManifest(
            "at most 255 background tapes".into(),
        ));
    }
    let case = Case {
        name: m.name,
        seed: m.seed,
        x,
        y,
        bg,
        relation: m.relation,
        plaintiff_program: read_program(dir, &m.programs.plaintiff)?,
        defendant_program: read_program(dir, &m.programs.defendant)?,
        expected: m.expected,
    };
    let lints = validate_case(&case);
    if strict && !lints.is_empty() {
        return Err(LoadError::LintFailure(lints));
    }
    Ok(Loaded { case, lints })
}

/// Writes `case` as a bundle under `dir`, creating it if needed.
pub fn write_case(case: &Case, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let write = |rel: String, bytes: &[u8]| -> io::Result<String> {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        Ok(rel)
    };
    let x = write("x.bin".into(), &case.x)?;
    let y = write("y.bin".into(), &case.y)?;
    let list = |name: &str, items: &[Vec<u8>]| -> io::Result<Vec<String>> {
        items
            .iter()
            .enumerate()
            .map(|(i, t)| write(format!("{name}/{i:03}.bin"), t))
            .collect()
    };
    let noncopy_x = list("noncopy_x", &case.bg.noncopy_x)?;
    let noncopy_y = list("noncopy_y", &case.bg.noncopy_y)?;
    let context = list("context", &case.bg.context)?;
    let program = |role: &str, p: &Option<Program>| -> io::Result<Option<String>> {
        p.as_ref()
            .map(|p| write(format!("programs/{role}.dvm"), p.bytes()))
            .transpose()
    };
    let programs = ProgramFiles {
        plaintiff: program("plaintiff", &case.plaintiff_program)?,
        defendant: program("defendant", &case.defendant_program)?,
    };
    let manifest = Manifest {
        name: case.name.clone(),
        seed: case.seed,
        relation: case.relation,
        x,
        y,
        noncopy_x,
        noncopy_y,
        context,
        programs,
        expected: case.expected,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)
}
