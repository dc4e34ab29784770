//! Command-line front end. `run` parses, executes and maps errors to exit codes.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::Path;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

pub use args::*;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit code for an error: usage/config/leakage 1, I/O and format 2, numeric 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Leakage(_) => EXIT_USAGE,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Contract(_) | Error::Format { .. } | Error::File { .. } | Error::Io(_) | Error::Json(_) => EXIT_IO,
    }
}

fn command() -> clap::Command {
    Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true))
}

/// Position of the subcommand token in `argv`, skipping the global `--config` flag.
fn subcommand_position(argv: &[OsString], cmd: &clap::Command) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(a.as_ref()).map(|_| i);
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().cloned();
        } else if let Some(rest) = s.strip_prefix("--config=") {
            found = Some(OsString::from(rest));
        }
    }
    found
}

fn toml_flag(key: &str, value: &toml::Value) -> Result<Vec<OsString>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &toml::Value| -> Result<String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(Error::Config(format!("config key {key}: unsupported value {other}"))),
        }
    };
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag.into()],
        toml::Value::Boolean(false) => vec![],
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
            vec![flag.into(), parts.join(",").into()]
        }
        v => vec![flag.into(), scalar(v)?.into()],
    })
}

/// Flags from the config file for `sub`: top-level keys the subcommand knows,
/// then every key of its `[sub]` table.
fn config_flags(path: &Path, sub: &clap::Command) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let known = |key: &str| {
        let long = key.replace('_', "-");
        sub.get_arguments().any(|a| a.get_long() == Some(long.as_str()))
    };
    let mut out = Vec::new();
    for (key, value) in &table {
        if !value.is_table() && key != "config" && known(key) {
            out.extend(toml_flag(key, value)?);
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(sub.get_name()) {
        for (key, value) in section {
            out.extend(toml_flag(key, value)?);
        }
    }
    Ok(out)
}

/// `argv` with config-file flags inserted right after the subcommand, so
/// flags given on the command line override them.
pub fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(cfg) = config_path(&argv) else { return Ok(argv) };
    let cmd = command();
    let Some(pos) = subcommand_position(&argv, &cmd) else { return Ok(argv) };
    let sub = cmd.find_subcommand(argv[pos].to_string_lossy().as_ref()).expect("located above");
    let injected = config_flags(Path::new(&cfg), sub)?;
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

pub enum Parsed {
    Run(Cli),
    /// Help or version text already rendered; exit with this code.
    Exit(i32, String),
}

pub fn parse(argv: Vec<OsString>) -> Result<Parsed, (i32, String)> {
    let argv = expand_argv(argv).map_err(|e| (exit_code(&e), format!("error: {e}")))?;
    match command().try_get_matches_from(argv) {
        Ok(m) => Cli::from_arg_matches(&m)
            .map(Parsed::Run)
            .map_err(|e| (EXIT_USAGE, first_line(&e))),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            Ok(Parsed::Exit(EXIT_OK, e.render().to_string()))
        }
        Err(e) => Err((EXIT_USAGE, first_line(&e))),
    }
}

fn first_line(e: &clap::Error) -> String {
    let text = e.render().to_string();
    text.lines().find(|l| !l.trim().is_empty()).unwrap_or("error: invalid usage").trim().to_string()
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(argv) {
        Ok(Parsed::Run(cli)) => cli,
        Ok(Parsed::Exit(code, text)) => {
            print!("{text}");
            return code;
        }
        Err((code, line)) => {
            eprintln!("{line}");
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            exit_code(&e)
        }
    }
}
