//! `sot` command-line front end: reads a JSON problem file, runs one solver
//! or oracle, and writes a JSON result document plus optional CSV plot tables.
//!
//! Exit codes: 0 success, 1 failed verdict (infeasible plan, violated check,
//! uncertified or failed computation), 2 usage or input errors.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde_json::{json, Value};

use crate::args::{Cli, Command};
use crate::commands::{Outcome, Settings};
use crate::error::{CliError, Result};
use crate::format::{read_problem, render, write_text, PlotSink};

fn execute(cli: &Cli) -> Result<Outcome> {
    let path = &cli.command.input().problem;
    let problem = read_problem(path)?;
    let settings = Settings::resolve(&problem, &cli.options)?;
    if settings.exact && !matches!(cli.command, Command::SolveFixed(_)) {
        return Err(CliError::Usage("--exact is only supported by solve-fixed".into()));
    }
    let mut plots = PlotSink::new(cli.options.plot_dir.clone())?;
    let mut outcome = match &cli.command {
        Command::SolveFixed(_) => commands::solve_fixed_cmd(&problem, path, &settings, &mut plots),
        Command::SolveFree(_) => commands::solve_free_cmd(&problem, path, &settings, &mut plots),
        Command::Solve1d(_) => commands::solve_1d_cmd(&problem, path, &settings, &mut plots),
        Command::LyapunovMap(_) => commands::lyapunov_cmd(&problem, &settings, &mut plots),
        Command::MongeApprox(_) => commands::monge_cmd(&problem, &settings, &mut plots),
        Command::Verify(_) => commands::verify_cmd(&problem, path, &settings),
        Command::Oracle(_) => commands::oracle_cmd(&problem, path, &settings),
    }?;
    if !plots.written.is_empty() {
        outcome.doc["plots"] = json!(plots.written);
    }
    Ok(outcome)
}

/// Puts `command` and `status` ahead of the command-specific fields.
fn document(command: &str, body: Value) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("command".into(), command.into());
    if let Value::Object(mut fields) = body {
        if let Some(status) = fields.shift_remove("status") {
            doc.insert("status".into(), status);
        }
        doc.extend(fields);
    }
    Value::Object(doc)
}

fn emit(cli: &Cli, doc: Value) -> Result<()> {
    let text = render(doc);
    match &cli.options.output {
        Some(path) => write_text(path, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    let result = match cli.options.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli),
    };
    let name = cli.command.name();
    let (doc, code) = match result {
        Ok(outcome) => (document(name, outcome.doc), u8::from(!outcome.ok)),
        Err(e) => {
            eprintln!("error: {e}");
            let body = json!({
                "status": "error",
                "error": { "kind": e.kind(), "message": e.to_string() },
            });
            (document(name, body), e.exit_code())
        }
    };
    match emit(&cli, doc) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
