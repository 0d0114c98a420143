//! Optional JSON file of flag defaults.
//!
//! Top-level keys apply to every command that has a flag of that name; an
//! object keyed by a command name applies to that command only and wins over
//! top-level keys. Flags given on the command line always win.
//!
//! ```json
//! {"jobs": 4, "extract": {"runs": 3, "endpoint": "http://127.0.0.1:8787/v1/chat/completions"}}
//! ```

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory};
use serde_json::{Map, Value};

use crate::Cli;

pub const CONFIG_FILE: &str = "webrec.config.json";

fn load(first: &ArgMatches) -> Result<Option<Map<String, Value>>, String> {
    let path = first
        .get_one::<PathBuf>("config")
        .expect("config has a default");
    let explicit = first.value_source("config") != Some(ValueSource::DefaultValue);
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && !explicit => return Ok(None),
        Err(e) => return Err(format!("{}: {e}", path.display())),
    };
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(Some(map)),
        Ok(_) => Err(format!("{}: expected a JSON object", path.display())),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

fn render_values(key: &str, value: &Value) -> Result<Vec<String>, String> {
    match value {
        Value::Bool(_) | Value::Null => Ok(Vec::new()),
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Number(n) => Ok(vec![n.to_string()]),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(format!(
                    "config key {key:?}: arrays may hold strings and numbers only"
                )),
            })
            .collect(),
        Value::Object(_) => Err(format!("config key {key:?}: unexpected object")),
    }
}

/// Returns `args` extended with `--flag value` pairs for every config entry
/// whose flag was not given on the command line.
pub fn apply(args: &[OsString], first: &ArgMatches) -> Result<Vec<OsString>, String> {
    let Some(map) = load(first)? else {
        return Ok(args.to_vec());
    };
    let Some((name, sub)) = first.subcommand() else {
        return Ok(args.to_vec());
    };
    let root = Cli::command();
    let command = root
        .find_subcommand(name)
        .expect("parsed subcommand exists")
        .clone();
    let subcommands: Vec<String> = root
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();

    let mut entries: Vec<(String, Value)> = Vec::new();
    for (k, v) in &map {
        if subcommands.contains(k) {
            continue;
        }
        entries.push((k.replace('_', "-"), v.clone()));
    }
    if let Some(section) = map.get(name) {
        let Value::Object(section) = section else {
            return Err(format!("config key {name:?}: expected an object"));
        };
        for (k, v) in section {
            let k = k.replace('_', "-");
            entries.retain(|(e, _)| *e != k);
            entries.push((k, v.clone()));
        }
    }

    let mut out = args.to_vec();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let arg = command
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            log::debug!("config key {key:?} does not apply to {name}");
            continue;
        };
        let id = arg.get_id().as_str();
        let given = sub.try_contains_id(id).unwrap_or(false)
            && sub.value_source(id) == Some(ValueSource::CommandLine)
            || first.try_contains_id(id).unwrap_or(false)
                && first.value_source(id) == Some(ValueSource::CommandLine);
        if given {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        if let Value::Bool(b) = value {
            if b {
                out.push(flag);
            }
            continue;
        }
        for v in render_values(&key, &value)? {
            out.push(flag.clone());
            out.push(v.into());
        }
    }
    Ok(out)
}
