//! Runs user-configured external tools (docking programs, generative models)
//! through a shell command template with placeholder substitution.
//!
//! Every call gets its own temporary directory, removed on all exit paths.
//! Output streams go to files in that directory so a chatty child can never
//! block on a full pipe, and the wall-clock timeout kills the whole process
//! group.

use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

pub const DEFAULT_TIMEOUT_S: u64 = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Shell command with `{ligand}`, `{pocket}`, `{out}` and (generators)
    /// `{count}` placeholders. Paths are substituted shell-quoted.
    pub command_template: String,
    /// Regular expression with one capture group around the affinity.
    pub affinity_pattern: String,
    pub timeout_s: u64,
    pub max_concurrency: usize,
    /// Environment variables passed through to the child; everything else is
    /// cleared.
    pub env_passthrough: Vec<String>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            command_template: String::new(),
            affinity_pattern: r"(-?\d+(?:\.\d+)?)".to_string(),
            timeout_s: DEFAULT_TIMEOUT_S,
            max_concurrency: 1,
            env_passthrough: vec!["PATH".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    #[error("empty command template")]
    EmptyCommand,
    #[error("failed to launch external tool: {message}")]
    Launch { message: String },
    #[error("external tool exited with status {code:?}: {stderr}")]
    ExitStatus { code: Option<i32>, stderr: String, raw_output: String },
    #[error("external tool timed out after {secs} s")]
    Timeout { secs: u64, raw_output: String },
    #[error("affinity pattern did not match the tool output")]
    PatternNotFound { raw_output: String },
    #[error("invalid affinity pattern: {0}")]
    BadPattern(String),
    #[error("external generator produced no valid molecules")]
    EmptyBatch { raw_output: String },
    #[error("io: {0}")]
    Io(String),
}

impl AdapterError {
    /// Captured stdout of the failed call, when there was one.
    pub fn raw_output(&self) -> Option<&str> {
        match self {
            AdapterError::ExitStatus { raw_output, .. }
            | AdapterError::Timeout { raw_output, .. }
            | AdapterError::PatternNotFound { raw_output }
            | AdapterError::EmptyBatch { raw_output } => Some(raw_output),
            _ => None,
        }
    }
}

fn io_err(e: std::io::Error) -> AdapterError {
    AdapterError::Io(e.to_string())
}

/// Single-quotes `s` for POSIX sh.
pub fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Replaces `{name}` placeholders; unknown placeholders are left verbatim.
pub fn substitute(template: &str, values: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in values {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ToolOutput {
    pub stdout: String,
    pub stderr: String,
}

/// Runs the substituted command in `workdir` under `sh -c`.
pub fn run_command(cfg: &AdapterConfig, command: &str, workdir: &Path) -> Result<ToolOutput, AdapterError> {
    if command.trim().is_empty() {
        return Err(AdapterError::EmptyCommand);
    }
    let stdout_path = workdir.join("stdout.txt");
    let stderr_path = workdir.join("stderr.txt");
    let stdout = File::create(&stdout_path).map_err(io_err)?;
    let stderr = File::create(&stderr_path).map_err(io_err)?;

    let mut cmd = Command::new("sh");
    cmd.arg("-c").arg(command).current_dir(workdir).stdin(Stdio::null()).stdout(stdout).stderr(stderr).env_clear();
    for name in &cfg.env_passthrough {
        if let Ok(v) = std::env::var(name) {
            cmd.env(name, v);
        }
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|e| AdapterError::Launch { message: e.to_string() })?;

    let secs = cfg.timeout_s.max(1);
    let status = child.wait_timeout(Duration::from_secs(secs)).map_err(io_err)?;
    let read = |p: &Path| std::fs::read_to_string(p).unwrap_or_default();
    let Some(status) = status else {
        kill_group(child.id());
        let _ = child.kill();
        let _ = child.wait();
        return Err(AdapterError::Timeout { secs, raw_output: read(&stdout_path) });
    };
    let out = ToolOutput { stdout: read(&stdout_path), stderr: read(&stderr_path) };
    if !status.success() {
        // sh reports 127 when the program itself is missing.
        if status.code() == Some(127) {
            return Err(AdapterError::Launch { message: out.stderr.trim().to_string() });
        }
        return Err(AdapterError::ExitStatus { code: status.code(), stderr: out.stderr, raw_output: out.stdout });
    }
    Ok(out)
}

#[cfg(unix)]
fn kill_group(pid: u32) {
    let _ = Command::new("kill").args(["-KILL", "--", &format!("-{pid}")]).stdout(Stdio::null()).stderr(Stdio::null()).status();
}

#[cfg(not(unix))]
fn kill_group(_pid: u32) {}

/// First capture of `pattern` in `text`, parsed as a float.
pub fn extract_affinity(pattern: &str, text: &str) -> Result<Option<f64>, AdapterError> {
    let re = Regex::new(pattern).map_err(|e| AdapterError::BadPattern(e.to_string()))?;
    if re.captures_len() < 2 {
        return Err(AdapterError::BadPattern("pattern needs one capture group".into()));
    }
    let found = re.captures_iter(text).filter_map(|c| c.get(1)?.as_str().trim().parse::<f64>().ok()).find(|v| v.is_finite());
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_and_substitution() {
        assert_eq!(shell_quote("a b"), "'a b'");
        assert_eq!(shell_quote("it's"), r"'it'\''s'");
        let s =
            substitute("dock {ligand} {pocket} > {out} {other}", &[("ligand", "L".into()), ("pocket", "P".into()), ("out", "O".into())]);
        assert_eq!(s, "dock L P > O {other}");
    }

    #[test]
    fn affinity_extraction() {
        let p = r"Affinity:\s*(-?\d+(?:\.\d+)?)";
        assert_eq!(extract_affinity(p, "Affinity: -7.3 kcal/mol").unwrap(), Some(-7.3));
        assert_eq!(extract_affinity(p, "nothing here").unwrap(), None);
        assert!(extract_affinity("(", "x").is_err());
        assert!(extract_affinity("abc", "x").is_err());
    }
}
