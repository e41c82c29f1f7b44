use crate::args::Format;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "ldl/1";

/// Exit codes.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_TRUNCATION: i32 = 4;

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Structured detail printed with the message.
    pub detail: Option<Value>,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: msg.into(), detail: None }
    }
}

impl From<ldl_core::Error> for Failure {
    fn from(e: ldl_core::Error) -> Self {
        use ldl_core::Error as E;
        let code = match &e {
            E::UnknownConstant(_)
            | E::UnknownName(_)
            | E::Config { .. }
            | E::Domain(_)
            | E::Truncation(_)
            | E::Unsupported(_) => EXIT_USAGE,
            E::IncompleteSum { .. } | E::Resource(_) | E::Dependency(_) => EXIT_TRUNCATION,
            _ => 1,
        };
        let detail = match &e {
            E::UnknownConstant(_) => Some(json!({ "known": ldl_core::constants::catalog_names() })),
            E::UnknownName(_) => Some(json!({ "builtin_families": ldl_core::families::builtin_names() })),
            E::IncompleteSum { required, available } => {
                Some(json!({ "required_prime_limit": required, "prime_limit": available }))
            }
            _ => None,
        };
        Failure { code, message: e.to_string(), detail }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure { code: 1, message: format!("{e:#}"), detail: None }
    }
}

/// What a command hands back for rendering.
pub struct Report {
    pub result: Value,
    pub csv: String,
    pub text: String,
    pub truncations: Vec<String>,
    /// Exit code after the report is written (verification failures).
    pub code: i32,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub argv: Vec<String>,
    pub config_sha256: String,
    pub truncations: Vec<String>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub versions: Value,
    pub output_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest(config: &Value, report: &Report, threads: usize, wall: f64) -> RunManifest {
    RunManifest {
        argv: std::env::args().collect(),
        config_sha256: sha256_hex(config.to_string().as_bytes()),
        truncations: report.truncations.clone(),
        threads,
        wall_time_s: wall,
        versions: json!({ "ldl": env!("CARGO_PKG_VERSION"), "schema": SCHEMA }),
        output_sha256: sha256_hex(report.result.to_string().as_bytes()),
    }
}

pub fn render_csv(rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// The rendered document and, for CSV and text, the manifest that travels
/// beside it.
pub fn render(
    command: &str,
    format: Format,
    report: &Report,
    m: &RunManifest,
) -> anyhow::Result<(String, Option<String>)> {
    let side = || serde_json::to_string_pretty(m).map(|s| s + "\n");
    Ok(match format {
        Format::Json => {
            let doc = json!({ "schema": SCHEMA, "command": command, "result": report.result, "manifest": m });
            (serde_json::to_string_pretty(&doc)? + "\n", None)
        }
        Format::Csv => (report.csv.clone(), Some(side()?)),
        Format::Text => (report.text.clone(), Some(side()?)),
    })
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}
