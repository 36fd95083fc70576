//! Number formatting, output sinks and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

/// Formats `x` like C's `%.9g`: nine significant digits, trailing zeros
/// dropped, scientific notation only for very large or small magnitudes.
pub fn g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Round first so the exponent reflects the rounded value (9.9999999996 -> 10).
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    let s = trim_zeros(&format!("{x:.decimals$}"));
    if s == "-0" { "0".into() } else { s }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Verification(m) | Failure::Io(m) => m,
        }
    }
}

impl From<xdmt_core::Error> for Failure {
    fn from(e: xdmt_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Io(format!("{}: {e}", p.display())),
        None => Failure::Io(format!("stdout: {e}")),
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    /// Null for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Collects the parameters of one run; `finish` stamps the end time.
pub struct Run {
    command: &'static str,
    parameters: BTreeMap<String, Value>,
    seed: Option<u64>,
    started: String,
}

impl Run {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            parameters: BTreeMap::new(),
            seed: None,
            started: now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started,
            finished: now(),
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` (plus its sidecar manifest) or to stdout.
pub fn emit(body: &str, out: Option<&Path>, run: Run) -> Result<(), Failure> {
    match out {
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| io_failure(None, e))
        }
        Some(path) => {
            fs::write(path, body).map_err(|e| io_failure(Some(path), e))?;
            let manifest = run.finish();
            let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            json.push('\n');
            let sidecar = manifest_path(path);
            fs::write(&sidecar, json).map_err(|e| io_failure(Some(&sidecar), e))
        }
    }
}

/// CSV document with LF line endings. Fields here are numbers, names and
/// empty strings, so no quoting is needed.
pub struct Csv(String);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut s = header.join(",");
        s.push('\n');
        Csv(s)
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(|f| f.as_ref()).collect();
        self.0.push_str(&line.join(","));
        self.0.push('\n');
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::g9;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(g9(4.0), "4");
        assert_eq!(g9(1.0 / 3.0), "0.333333333");
        assert_eq!(g9(4.0 / 3.0), "1.33333333");
        assert_eq!(g9(-2.5), "-2.5");
        assert_eq!(g9(1.25e-7), "1.25e-07");
        assert_eq!(g9(123456789012.0), "1.23456789e+11");
        assert_eq!(g9(9.9999999996), "10");
        assert_eq!(g9(0.0001), "0.0001");
        assert_eq!(g9(-1e-300 * 1e-300), "0");
    }
}
