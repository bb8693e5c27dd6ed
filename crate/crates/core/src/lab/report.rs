//! Gate results and report files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::Config;
use crate::error::{Error, Result};

/// Identifier stamped on every report. `IDLA_BUILD_ID` may be set at compile
/// time (for instance to `git describe` output).
pub fn build_id() -> String {
    match option_env!("IDLA_BUILD_ID") {
        Some(id) => id.to_string(),
        None => format!("idla-{}", env!("CARGO_PKG_VERSION")),
    }
}

/// One pass/fail check.
#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Gate {
    pub fn new(name: impl Into<String>, pass: bool, detail: Value) -> Self {
        Gate {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Everything a command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: String,
    pub gates: Vec<Gate>,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

/// `# build ...` and `# config ...` comment lines for CSV outputs.
pub fn header_lines(command: &str, config: &Config) -> String {
    let meta = json!({ "build": build_id(), "command": command });
    let cfg = serde_json::to_string(config).expect("config serialises");
    format!("# {meta}\n# {cfg}\n")
}

/// Collects output files so a failed command can remove what it wrote.
#[derive(Debug, Default)]
pub struct Writer {
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn ensure_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.written.push(path.to_path_buf());
        f.write_all(bytes).map_err(|e| Error::io(path, e))
    }

    /// Write a JSON report carrying the build id and resolved config.
    pub fn write_json(&mut self, path: &Path, command: &str, config: &Config, gates: &[Gate], summary: &Value) -> Result<()> {
        let doc = json!({
            "build": build_id(),
            "command": command,
            "config": config,
            "pass": gates.iter().all(|g| g.pass),
            "gates": gates,
            "summary": summary,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    /// Remove every file written so far.
    pub fn discard(self) {
        for p in self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}
