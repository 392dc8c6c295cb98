use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::CliError;

/// Provenance written next to every result file.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub inputs: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((path.display().to_string(), sha256_hex(bytes)));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool = acorsis {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "command = {}", self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        for (k, v) in &self.params {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (path, digest) in &self.inputs {
            let _ = writeln!(out, "input = {path} sha256:{digest}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning = {w}");
        }
        let _ = writeln!(out, "wall_clock_seconds = {:.3}", self.wall_clock_seconds);
        out
    }

    /// `<out>.manifest` for a report file.
    pub fn sidecar(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}
