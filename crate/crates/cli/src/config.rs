//! Flat `key = value` config files. Keys are long flag names; values given
//! on the command line win over the file.

use std::collections::BTreeSet;
use std::path::Path;

use clap::Command;

use crate::CliError;

/// Angle flags are mutually exclusive as a group: setting any of them on
/// the command line discards all of them from the file.
const ANGLE_GROUP: [&str; 9] = ["optimal", "a", "b", "c", "d", "a-deg", "b-deg", "c-deg", "d-deg"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(path.to_string());
        }
    }
    None
}

fn flag_present(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Long flag names accepted by the subcommand selected in `args`,
/// including global flags.
fn accepted_flags(command: &Command, args: &[String]) -> BTreeSet<String> {
    let mut accepted = BTreeSet::new();
    let mut current = command;
    let collect = |cmd: &Command, set: &mut BTreeSet<String>| {
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                set.insert(long.to_string());
            }
        }
    };
    collect(current, &mut accepted);
    for token in args.iter().skip(1) {
        if let Some(sub) = current.find_subcommand(token) {
            current = sub;
            collect(current, &mut accepted);
        }
    }
    accepted
}

/// Expands `--config FILE` by appending the file's entries as flags that
/// are not already present.
pub fn merge(command: &Command, args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let entries = parse(&text)?;
    let accepted = accepted_flags(command, &args);
    let angles_on_command_line = ANGLE_GROUP.iter().any(|k| flag_present(&args, k));

    let mut merged = args.clone();
    for (key, value) in entries {
        if key == "config" || !accepted.contains(&key) {
            return Err(CliError::Usage(format!(
                "config key `{key}` is not a flag of this command"
            )));
        }
        if flag_present(&args, &key) || (angles_on_command_line && ANGLE_GROUP.contains(&key.as_str())) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(format!("--{key}")),
            "false" => {}
            _ => merged.push(format!("--{key}={value}")),
        }
    }
    Ok(merged)
}
