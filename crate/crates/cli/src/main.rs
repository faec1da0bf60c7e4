//! `gkdv-duo <command> --config <file> [--output-dir <dir>]`
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::Parser;
use serde_json::{json, Value};

use config::{Command, RunConfig};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// A failed run, with anything already computed that should still be emitted.
#[derive(Debug)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub exit: u8,
    pub detail: Option<Value>,
    pub csvs: Vec<(String, Vec<u8>)>,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure { kind: "validation".into(), message: message.into(), exit: EXIT_VALIDATION, detail: None, csvs: Vec::new() }
    }
}

impl From<gkdv_core::Error> for Failure {
    fn from(e: gkdv_core::Error) -> Self {
        let exit = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION };
        Failure { kind: e.kind().into(), message: e.to_string(), exit, detail: None, csvs: Vec::new() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gkdv-duo", version, about = "Ground states, evolution and stability for coupled gKdV systems")]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn threads() -> Result<usize, Failure> {
    match std::env::var("GKDV_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::validation(format!("GKDV_THREADS must be a positive integer, got {s:?}"))),
        },
    }
}

fn set_parallelism(n: usize) {
    let par = if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}

struct Prepared {
    config: RunConfig,
    echo: Value,
}

fn prepare(cli: &Cli, raw: &[u8]) -> Result<Prepared, Failure> {
    let echo: Value =
        serde_json::from_slice(raw).map_err(|e| Failure::validation(format!("config is not valid JSON: {e}")))?;
    let config: RunConfig =
        serde_json::from_value(echo.clone()).map_err(|e| Failure::validation(format!("invalid config: {e}")))?;
    if let Some(c) = config.command {
        if c != cli.command {
            return Err(Failure::validation(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                cli.command.name()
            )));
        }
    }
    config.params.validate()?;
    if !(config.omega.is_finite() && config.omega > 0.0) {
        return Err(Failure::validation(format!("omega must be positive, got {}", config.omega)));
    }
    Ok(Prepared { config, echo })
}

/// `output_dir` from the flag, else from the config when it can at least be read as JSON.
fn output_dir(cli: &Cli, raw: Option<&[u8]>) -> Option<PathBuf> {
    if let Some(d) = &cli.output_dir {
        return Some(d.clone());
    }
    let v: Value = serde_json::from_slice(raw?).ok()?;
    v.get("output_dir")?.as_str().map(PathBuf::from)
}

fn result_body(command: Command, outcome: &Result<commands::Emitted, Failure>) -> Value {
    match outcome {
        Ok(e) => {
            let mut body = serde_json::Map::new();
            body.insert("command".into(), json!(command.name()));
            body.insert("status".into(), json!(e.status));
            if let Value::Object(m) = &e.result {
                body.extend(m.clone());
            } else {
                body.insert("result".into(), e.result.clone());
            }
            Value::Object(body)
        }
        Err(f) => json!({
            "command": command.name(),
            "status": "error",
            "error": { "kind": f.kind, "message": f.message, "exit_code": f.exit },
            "detail": f.detail,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started_at = now();
    let raw = std::fs::read(&cli.config);
    let dir = output_dir(&cli, raw.as_deref().ok());

    let (outcome, echo, threads) = match (&raw, threads()) {
        (Err(e), _) => (Err(Failure::validation(format!("cannot read config {}: {e}", cli.config.display()))), Value::Null, 1),
        (Ok(_), Err(f)) => (Err(f), Value::Null, 1),
        (Ok(bytes), Ok(n)) => match prepare(&cli, bytes) {
            Err(f) => (Err(f), Value::Null, n),
            Ok(p) => {
                set_parallelism(n);
                (commands::run(cli.command, &p.config), p.echo, n)
            }
        },
    };

    let exit = match &outcome {
        Ok(_) => 0,
        Err(f) => {
            eprintln!("gkdv-duo {}: {} ({})", cli.command.name(), f.message, f.kind);
            f.exit
        }
    };
    let Some(dir) = dir else {
        if exit == 0 {
            eprintln!("gkdv-duo: no output directory (use --output-dir or `output_dir`)");
            return ExitCode::from(EXIT_VALIDATION);
        }
        return ExitCode::from(exit);
    };

    let mut files = match &outcome {
        Ok(e) => e.csvs.clone(),
        Err(f) => f.csvs.clone(),
    };
    files.push(("result.json".into(), output::json_bytes(&result_body(cli.command, &outcome))));
    let entries = match output::write_files(&dir, &files) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("gkdv-duo: cannot write to {}: {e}", dir.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let manifest = output::Manifest {
        artifact: "gkdv-duo",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        started_at,
        finished_at: now(),
        input_hash: raw.as_deref().map(output::sha256_hex).unwrap_or_default(),
        threads,
        exit_code: exit as i32,
        config: echo,
        files: entries,
    };
    if let Err(e) = output::write_manifest(&dir, &manifest) {
        eprintln!("gkdv-duo: cannot write manifest: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    ExitCode::from(exit)
}
