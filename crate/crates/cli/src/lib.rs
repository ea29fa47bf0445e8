//! Report-producing commands behind the `cardy` binary.

pub mod commands;

use cardy_core::{CheckReport, Tolerance};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tol: Tolerance,
    pub seed: u64,
    pub format: Format,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: Tolerance::default(),
            seed: 0,
            format: Format::Text,
            timing: false,
        }
    }
}

/// Input that could not be turned into a valid object. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: PathBuf,
    /// JSON pointer into the file, when the problem is in its structure.
    pub pointer: Option<String>,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(p) = &self.pointer {
            write!(f, " at {}", if p.is_empty() { "/" } else { p })?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for InputError {}

impl InputError {
    pub fn new(path: &Path, message: impl std::fmt::Display) -> Self {
        InputError {
            path: path.to_path_buf(),
            pointer: None,
            message: message.to_string(),
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => write!(out, "/{index}").unwrap(),
            Segment::Map { key } => write!(out, "/{}", key.replace('~', "~0").replace('/', "~1")).unwrap(),
            Segment::Enum { variant } => write!(out, "/{variant}").unwrap(),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| InputError {
        path: path.to_path_buf(),
        pointer: Some(json_pointer(e.path())),
        message: e.inner().to_string(),
    })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::new(path, e))?;
    parse_json(path, &text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub seed: u64,
    pub tolerances: Tolerance,
    pub status: Overall,
    pub checks: Vec<CheckReport>,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn new(command: Vec<String>, cfg: &RunConfig) -> Self {
        Report {
            tool: "cardy".into(),
            version: VERSION.into(),
            command,
            seed: cfg.seed,
            tolerances: cfg.tol,
            status: Overall::Pass,
            checks: Vec::new(),
            results: Value::Object(Default::default()),
            wall_time_ms: None,
        }
    }

    pub fn push(&mut self, r: CheckReport) {
        self.checks.push(r);
        self.refresh();
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("results serialise");
        if let Value::Object(m) = &mut self.results {
            m.insert(key.to_string(), v);
        }
    }

    fn refresh(&mut self) {
        self.status = if self.checks.iter().all(CheckReport::passed) {
            Overall::Pass
        } else {
            Overall::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.status == Overall::Pass
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "cardy {} {}", self.version, self.command.join(" ")).unwrap();
        writeln!(
            s,
            "seed {}  eps_structural {:e}  eps_rank {:e}",
            self.seed, self.tolerances.eps_structural, self.tolerances.eps_rank
        )
        .unwrap();
        let (mut total, mut failed) = (0, 0);
        for r in &self.checks {
            for rec in &r.records {
                total += 1;
                let mark = if rec.passed() { "PASS" } else { "FAIL" };
                if !rec.passed() {
                    failed += 1;
                }
                write!(s, "{mark}  {}/{}", r.name, rec.name).unwrap();
                if let Some(loc) = &rec.location {
                    write!(s, "  [{loc}]").unwrap();
                }
                write!(s, "  residual {:.3e}", rec.residual).unwrap();
                if let Some(d) = &rec.detail {
                    write!(s, "  {d}").unwrap();
                }
                s.push('\n');
            }
        }
        if self.results.as_object().is_some_and(|m| !m.is_empty()) {
            writeln!(s, "results:").unwrap();
            for (k, v) in self.results.as_object().unwrap() {
                writeln!(s, "  {k}: {v}").unwrap();
            }
        }
        if let Some(ms) = self.wall_time_ms {
            writeln!(s, "wall time {ms:.1} ms").unwrap();
        }
        let verdict = if self.passed() { "pass" } else { "fail" };
        writeln!(s, "{verdict}: {total} checks, {failed} failed").unwrap();
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
        }
    }
}
