//! Plain-text record of one command run: configuration hash, artifacts, timing and checks.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Outcome of one declared check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Manifest of a run, written to `manifest.txt` in the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub artifacts: Vec<PathBuf>,
    pub wall_time: f64,
    pub checks: Vec<Check>,
    /// Error that ended the run, if any.
    pub error: Option<String>,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

impl RunManifest {
    pub fn new(command: &str, config_hash: &str) -> Self {
        RunManifest { command: command.into(), config_hash: config_hash.into(), artifacts: Vec::new(), wall_time: 0.0, checks: Vec::new(), error: None }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.to_path_buf());
    }

    /// The run succeeded and every check passed.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    /// First failing check or the run error.
    pub fn failure(&self) -> Option<String> {
        if let Some(e) = &self.error {
            return Some(e.clone());
        }
        self.checks.iter().find(|c| !c.passed).map(|c| format!("check '{}' failed: {}", c.name, c.detail))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time);
        let _ = writeln!(s, "status = {}", if self.passed() { "pass" } else { "fail" });
        if let Some(f) = self.failure() {
            let _ = writeln!(s, "failure = {f}");
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact = {}", a.display());
        }
        for c in &self.checks {
            let _ = writeln!(s, "check = {} | {} | {}", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_checks_are_named() {
        let mut m = RunManifest::new("spectrum", "abc");
        m.check("levels", true, "ok");
        assert!(m.passed());
        m.check("energies", false, "off by 1e-3");
        assert!(!m.passed());
        let text = m.to_text();
        assert!(text.contains("status = fail"));
        assert!(text.contains("failure = check 'energies' failed: off by 1e-3"));
        m.error = Some("boom".into());
        assert_eq!(m.failure().unwrap(), "boom");
    }
}
