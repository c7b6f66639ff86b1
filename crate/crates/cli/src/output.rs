//! Result rendering. Primary files depend only on the inputs; the run
//! timestamp and free-form notes go to a `<out>.meta.json` side file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use ergophase_core::phase::arg;
use ergophase_core::C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::model::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub command: &'static str,
    pub json: Value,
    pub csv: Option<String>,
    pub default_format: Format,
    pub notes: Vec<String>,
}

impl Artifact {
    pub fn json(command: &'static str, json: Value) -> Self {
        Self {
            command,
            json,
            csv: None,
            default_format: Format::Json,
            notes: Vec::new(),
        }
    }

    pub fn with_csv(mut self, csv: String, default: Format) -> Self {
        self.csv = Some(csv);
        self.default_format = default;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn render(&self, format: Option<Format>) -> CliResult<String> {
        match format.unwrap_or(self.default_format) {
            Format::Json => {
                let mut s =
                    serde_json::to_string_pretty(&self.json).expect("json values serialize");
                s.push('\n');
                Ok(s)
            }
            Format::Csv => self.csv.clone().ok_or_else(|| {
                CliError::Usage(format!(
                    "`{}` has no CSV form; use --format json",
                    self.command
                ))
            }),
        }
    }
}

/// Wraps a command payload with the schema version and command name.
pub fn envelope(command: &str, mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("command".into(), json!(command));
    }
    body
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the primary output (file or stdout) and, for files, the side file.
pub fn emit(
    artifact: &Artifact,
    format: Option<Format>,
    out: Option<&Path>,
    args: &[String],
    warnings: &[String],
) -> CliResult<()> {
    let text = artifact.render(format)?;
    match out {
        None => {
            print!("{text}");
            for w in warnings.iter().chain(&artifact.notes) {
                eprintln!("note: {w}");
            }
        }
        Some(path) => {
            write(path, &text)?;
            let generated = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let meta = json!({
                "schema_version": SCHEMA_VERSION,
                "command": artifact.command,
                "tool_version": env!("CARGO_PKG_VERSION"),
                "generated_unix_seconds": generated,
                "args": args,
                "warnings": warnings,
                "notes": artifact.notes,
            });
            let mut m = serde_json::to_string_pretty(&meta).expect("json values serialize");
            m.push('\n');
            write(&meta_path(path), &m)?;
        }
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Appends `re,im,abs,arg` (Rust's shortest round-trip float formatting).
pub fn push_complex(line: &mut String, z: C64) {
    let phase = if z == C64::new(0.0, 0.0) { 0.0 } else { arg(z) };
    let _ = write!(line, "{},{},{},{}", z.re, z.im, z.norm(), phase);
}

pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Finite floats as JSON numbers; non-finite values as null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn cplx(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}
