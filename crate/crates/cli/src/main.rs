//! `operaq`: batch frontend over the toolkit. Reads JSON artifacts, runs one
//! command, writes one JSON report. Exit 0 on success, 1 when the verdict
//! fails, 2 on bad input.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

pub use io::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckCp,
    CheckTp,
    Choi,
    Kraus,
    Dilate,
    Minimal,
    Intertwine,
    Adjoint,
    Nadjoint,
    Zigzag,
    Feedback,
    TermEval,
    OperadLaws,
    MonadLaws,
    AlgebraLaws,
    Homcheck,
    Opequiv,
    CircuitRealize,
    IdealMember,
    IdealClosure,
    Quotient,
    NogoBroadcast,
    CloneMatch,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "operaq", version, about = "Multilinear quantum process toolkit")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Input JSON files, in the order the command expects.
    #[arg(long = "in", num_args = 1.., action = clap::ArgAction::Append)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Tolerance override, `key=value`.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    /// Integer parameter, `key=value` (trials, d, states, ...).
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, u64)>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn split_kv(s: &str) -> Result<(&str, &str), String> {
    s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = split_kv(s)?;
    let v: f64 = v.parse().map_err(|e| format!("tolerance `{k}`: {e}"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("tolerance `{k}` must be finite and non-negative"));
    }
    Ok((k.to_string(), v))
}

fn parse_param(s: &str) -> Result<(String, u64), String> {
    let (k, v) = split_kv(s)?;
    Ok((k.to_string(), v.parse().map_err(|e| format!("parameter `{k}`: {e}"))?))
}

/// Result of a command: the verdict and its report body.
pub struct Outcome {
    pub pass: bool,
    pub report: Value,
}

fn init_logging() {
    let level = match std::env::var("OPERAQ_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).try_init();
    if let Ok(v) = std::env::var("OPERAQ_LOG") {
        if !["quiet", "info", "debug"].contains(&v.as_str()) {
            log::warn!("OPERAQ_LOG={v:?} is not one of quiet, info, debug");
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let command = cli.command.name();
    let (code, doc) = match commands::run(&cli) {
        Ok(out) => (
            if out.pass { 0 } else { 1 },
            json!({
                "schema": io::SCHEMA,
                "command": command,
                "seed": cli.seed,
                "status": if out.pass { "pass" } else { "fail" },
                "report": out.report,
            }),
        ),
        Err(e) => {
            log::error!("{e}");
            (
                2,
                json!({
                    "schema": io::SCHEMA,
                    "command": command,
                    "seed": cli.seed,
                    "status": "error",
                    "error": e.to_string(),
                }),
            )
        }
    };
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
