//! `gmequiv` command-line front-end.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use thiserror::Error;

use crate::args::{Cli, Request};
use crate::commands::Meta;
use crate::config::RunConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_GATE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gmequiv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn main() -> ExitCode {
    let code = run(std::env::args_os().collect(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}

/// Runs one invocation and returns the exit code. Results go to `out`
/// unless `--out` names a file; diagnostics go to `err`.
fn run(argv: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    gmequiv::rng::configure_threads_from_env();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{rendered}");
                return EXIT_OK;
            }
            let _ = write!(err, "{rendered}");
            if !rendered.contains("Usage:") {
                let _ = writeln!(err, "\n{}", usage_for(&argv));
            }
            if mentions_kernel(&argv) {
                print_grammar(err);
            }
            return EXIT_USAGE;
        }
    };
    let command = shell_line(&argv);
    let cfg = match cli.command.into_request() {
        Request::Run(cfg) => *cfg,
        Request::Replay(path) => match load_config(&path) {
            Ok(cfg) => cfg,
            Err(e) => return report(e, &argv, err),
        },
    };
    let meta = Meta::new(command, &cfg);
    let outcome = match commands::execute(&cfg, &meta) {
        Ok(o) => o,
        Err(e) => return report(e, &argv, err),
    };
    if let Err(e) = emit(&cfg, &outcome.body, out) {
        return report(e, &argv, err);
    }
    for w in &outcome.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match outcome.gate {
        Some((true, msg)) => {
            let _ = writeln!(err, "PASS: {msg}");
            EXIT_OK
        }
        Some((false, msg)) => {
            let _ = writeln!(err, "FAIL: {msg}");
            EXIT_GATE
        }
        None => EXIT_OK,
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    RunConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit(cfg: &RunConfig, body: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
                path: "<stdout>".into(),
                source: e,
            }),
            _ => Ok(()),
        },
    }
}

fn report(e: CliError, argv: &[OsString], err: &mut dyn Write) -> u8 {
    let _ = writeln!(err, "error: {e}");
    match e {
        CliError::Usage(_) => {
            let _ = writeln!(err, "\n{}", usage_for(argv));
            EXIT_USAGE
        }
        CliError::Core(gmequiv::Error::Parse(_) | gmequiv::Error::InvalidSpec(_)) => {
            print_grammar(err);
            EXIT_USAGE
        }
        _ => EXIT_ERROR,
    }
}

/// Usage line of the subcommand named in `argv`, or of the program.
fn usage_for(argv: &[OsString]) -> clap::builder::StyledStr {
    let mut cmd = Cli::command();
    cmd.build();
    let name = argv.get(1).map(|a| a.to_string_lossy().into_owned());
    match name.and_then(|n| cmd.find_subcommand_mut(&n).map(|s| s.render_usage())) {
        Some(usage) => usage,
        None => cmd.render_usage(),
    }
}

fn mentions_kernel(argv: &[OsString]) -> bool {
    argv.iter().any(|a| a.to_string_lossy().starts_with("--kernel"))
}

fn print_grammar(err: &mut dyn Write) {
    let _ = writeln!(err, "\nkernel expressions in t follow this grammar (EBNF):\n{}", gmequiv::GRAMMAR);
}

/// The invocation as a shell line, program name normalised to `gmequiv`.
fn shell_line(argv: &[OsString]) -> String {
    let mut parts = vec!["gmequiv".to_string()];
    parts.extend(argv.iter().skip(1).map(|a| shell_quote(&a.to_string_lossy())));
    parts.join(" ")
}

fn shell_quote(s: &str) -> String {
    let safe = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-./=:,+@%".contains(c));
    if safe {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}
