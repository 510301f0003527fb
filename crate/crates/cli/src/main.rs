//! corners-lab: runs one verification or experiment from a config file and
//! writes a JSON (or CSV) report.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or a
//! computation errors, 2 for bad flags or configuration.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use commands::{Ctx, Outcome, COMMANDS};
use config::{CliError, CliResult, Params};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "corners-lab", version, about = "Verify and sample beta-corners processes")]
struct Args {
    /// Command; falls back to the `command` key of the config.
    command: Option<String>,
    /// TOML config: top-level keys plus [measure], [loop], … sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the command's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, env = "CORNERS_LAB_THREADS")]
    threads: Option<usize>,
    /// Report path; stdout when absent. Tabular commands also write the
    /// CSV next to a JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

const DEFAULT_SEED: u64 = 20240917;

fn load(args: &Args) -> CliResult<(String, Params, u64, Option<f64>)> {
    let mut p = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Params::parse(&text)?
        }
        None => Params::default(),
    };
    let from_file = p.opt_str("command")?.map(str::to_string);
    let command = match (&args.command, from_file) {
        (Some(a), Some(b)) if *a != b => {
            return Err(CliError::Config(format!("command {a:?} disagrees with config command {b:?}")))
        }
        (Some(a), _) => a.clone(),
        (None, Some(b)) => b,
        (None, None) => return Err(CliError::Config(format!("no command given; expected one of {COMMANDS:?}"))),
    };
    if !COMMANDS.contains(&command.as_str()) {
        return Err(CliError::Config(format!("unknown command {command:?}; expected one of {COMMANDS:?}")));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => p.uint_or("seed", DEFAULT_SEED)?,
    };
    let tol = match args.tol {
        Some(t) => Some(t),
        None => p.raw_f64("tol")?,
    };
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive, got {t}")));
        }
    }
    p.set("command", toml::Value::String(command.clone()));
    p.set("seed", toml::Value::Integer(seed as i64));
    Ok((command, p, seed, tol))
}

fn report(command: &str, p: &Params, o: &Outcome) -> serde_json::Value {
    json!({
        "schema": 1,
        "command": command,
        "passed": o.failures.is_empty(),
        "config": p.as_json(),
        "results": o.results,
        "failures": o.failures,
    })
}

fn emit(args: &Args, body: &str) -> CliResult<()> {
    match &args.out {
        Some(path) => {
            fs::write(path, body).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
            let stamp =
                std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let meta = json!({ "version": env!("CARGO_PKG_VERSION"), "unix_time": stamp });
            let mut mp = path.as_os_str().to_owned();
            mp.push(".meta.json");
            fs::write(PathBuf::from(mp), meta.to_string())
                .map_err(|e| CliError::Run(format!("cannot write metadata: {e}")))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| CliError::Run(e.to_string()))?;
        }
    }
    Ok(())
}

fn run(args: &Args) -> CliResult<bool> {
    let (command, p, seed, tol) = load(args)?;
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Run(e.to_string()))?;
    }
    let ctx = Ctx { p: &p, seed, tol, out: args.out.as_deref() };
    let outcome = commands::run(&command, &ctx)?;
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report(&command, &p, &outcome))
                .map_err(|e| CliError::Run(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => match &outcome.csv {
            Some(c) => c.clone(),
            None => return Err(CliError::Config(format!("{command} has no CSV output; use --format json"))),
        },
    };
    emit(args, &body)?;
    if let (Format::Json, Some(csv), Some(out)) = (args.format, &outcome.csv, &args.out) {
        let path = out.with_extension("csv");
        fs::write(&path, csv).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    }
    for f in &outcome.failures {
        eprintln!("FAIL: {f}");
    }
    Ok(outcome.failures.is_empty())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Run(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
