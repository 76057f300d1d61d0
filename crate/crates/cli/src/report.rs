use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, CliResult, OUT_DIR_ENV};

/// Provenance block at the top of every report.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub tolerances: BTreeMap<&'static str, f64>,
    /// Content digests of the input files.
    pub inputs: BTreeMap<String, String>,
}

impl Header {
    pub fn new(command: &'static str, seed: u64) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("hermitian", deficiency_core::qcore::tol::HERMITIAN);
        tolerances.insert("trace", deficiency_core::qcore::tol::TRACE);
        tolerances.insert("psd", deficiency_core::qcore::tol::PSD);
        tolerances.insert("completeness", deficiency_core::qcore::tol::COMPLETENESS);
        Self {
            tool: "deficiency",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            tolerances,
            inputs: BTreeMap::new(),
        }
    }

    pub fn tolerance(mut self, name: &'static str, value: f64) -> Self {
        self.tolerances.insert(name, value);
        self
    }

    pub fn input(mut self, name: &str, digest: String) -> Self {
        self.inputs.insert(name.to_string(), digest);
        self
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Resolves the output path: explicit `--out`, else `$DEFICIENCY_OUT_DIR/<default_name>`,
/// else `None` for stdout.
pub fn output_path(out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(default_name)),
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes to the resolved path or prints to stdout.
pub fn emit(out: Option<&Path>, default_name: &str, text: &str) -> CliResult<()> {
    match output_path(out, default_name) {
        Some(path) => write_text(&path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
