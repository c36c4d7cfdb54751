//! `--config file.toml`: top-level keys fill global flags, a table named
//! after the subcommand fills that subcommand's flags. Keys are flag names
//! with `_` or `-`; flags given on the command line win.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command, CommandFactory, FromArgMatches};
use toml::{Table, Value};

use crate::Cli;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
}

pub fn parse(argv: Vec<OsString>) -> Result<Cli, ParseError> {
    let cmd = Cli::command();
    // Lenient first pass: required flags may still come from the file.
    let matches = cmd.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let Some(path) = matches.get_one::<std::path::PathBuf>("config").cloned() else {
        let matches = cmd.try_get_matches_from(&argv)?;
        return Ok(Cli::from_arg_matches(&matches)?);
    };
    let path = path.as_path();
    let table = load(path)?;
    let err = |message: String| ParseError::Config { path: path.display().to_string(), message };

    let mut head = vec![argv.first().cloned().unwrap_or_else(|| "wristgest".into())];
    let mut tail = Vec::new();
    let sub = matches.subcommand();
    for (key, value) in &table {
        if let Value::Table(inner) = value {
            if let Some((name, sub_matches)) = sub.filter(|(name, _)| *name == key) {
                let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
                for (k, v) in inner {
                    tail.extend(flag_args(sub_cmd, sub_matches, k, v).map_err(|m| err(format!("[{name}] {m}")))?);
                }
            } else if cmd.find_subcommand(key).is_none() {
                return Err(err(format!("unknown section [{key}]")));
            }
        } else {
            head.extend(flag_args(&cmd, &matches, key, value).map_err(err)?);
        }
    }
    head.extend(argv.into_iter().skip(1));
    head.extend(tail);
    let merged = cmd.try_get_matches_from(head)?;
    Ok(Cli::from_arg_matches(&merged)?)
}

fn load(path: &Path) -> Result<Table, ParseError> {
    let err = |message: String| ParseError::Config { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    text.parse::<Table>().map_err(|e| err(e.to_string()))
}

/// Command-line tokens standing in for `key = value`, or none when the flag
/// was already given.
fn flag_args(cmd: &Command, matches: &ArgMatches, key: &str, value: &Value) -> Result<Vec<OsString>, String> {
    let id = key.replace('-', "_");
    let arg = cmd
        .get_arguments()
        .find(|a| a.get_id().as_str() == id && a.get_long().is_some())
        .ok_or_else(|| format!("unknown key `{key}`"))?;
    if id == "config" {
        return Err("`config` cannot be set from a config file".into());
    }
    if matches.value_source(&id) == Some(ValueSource::CommandLine) {
        return Ok(Vec::new());
    }
    let flag = OsString::from(format!("--{}", arg.get_long().expect("checked above")));
    let scalar = |v: &Value| -> Result<OsString, String> {
        match v {
            Value::String(s) => Ok(s.into()),
            Value::Integer(i) => Ok(i.to_string().into()),
            Value::Float(f) => Ok(f.to_string().into()),
            other => Err(format!("`{key}` must be a string or number, got {}", other.type_str())),
        }
    };
    Ok(match value {
        Value::Boolean(true) => vec![flag],
        Value::Boolean(false) => Vec::new(),
        Value::Array(items) => {
            let mut out = Vec::new();
            for v in items {
                out.push(flag.clone());
                out.push(scalar(v)?);
            }
            out
        }
        v => vec![flag, scalar(v)?],
    })
}
