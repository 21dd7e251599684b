//! INI config files merged into the command line.
//!
//! Keys in `[global]` (or before any section) apply to global flags; keys
//! in a section named after the subcommand apply to that subcommand. A key
//! is the long flag name with dashes or underscores. Flags given on the
//! command line win over file values.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};
use ini::Ini;

use crate::CliError;

/// Long flag names accepted by `cmd` (with their arity).
fn long_flags(cmd: &Command) -> Vec<(String, bool)> {
    cmd.get_arguments()
        .filter_map(|a| {
            let takes = !matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count);
            a.get_long().map(|l| (l.to_string(), takes))
        })
        .collect()
}

fn given(argv: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let eq = format!("--{flag}=");
    argv.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&eq)
    })
}

/// Position of the subcommand token and its name, skipping global flags
/// and their values.
fn find_subcommand(root: &Command, argv: &[OsString]) -> Option<(usize, String)> {
    let globals = long_flags(root);
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy().to_string();
        if let Some(flag) = a.strip_prefix("--") {
            let takes = globals.iter().any(|(l, t)| l == flag && *t);
            i += if takes { 2 } else { 1 };
            continue;
        }
        if root.find_subcommand(&a).is_some() {
            return Some((i, a));
        }
        i += 1;
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    for (i, a) in argv.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return argv.get(i + 1).cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn expand(
    section: &str,
    props: &ini::Properties,
    known: &[(String, bool)],
    argv: &[OsString],
    out: &mut Vec<OsString>,
) -> Result<(), CliError> {
    for (key, value) in props.iter() {
        let flag = key.trim().replace('_', "-");
        let Some((_, takes)) = known.iter().find(|(l, _)| *l == flag) else {
            return Err(CliError::Usage(format!("unknown key {key:?} in [{section}]")));
        };
        if flag == "config" || given(argv, &flag) {
            continue;
        }
        if *takes {
            out.push(format!("--{flag}").into());
            out.push(value.trim().into());
        } else {
            match value.trim() {
                "true" | "1" | "yes" => out.push(format!("--{flag}").into()),
                "false" | "0" | "no" => {}
                v => return Err(CliError::Usage(format!("key {key:?} in [{section}] expects a boolean, got {v:?}"))),
            }
        }
    }
    Ok(())
}

/// Returns `argv` with the config file's values inserted; unchanged when no
/// `--config` is given.
pub fn merge(root: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else { return Ok(argv) };
    let path = Path::new(&path);
    let ini = Ini::load_from_file(path).map_err(|e| match e {
        ini::Error::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
        ini::Error::Parse(e) => CliError::Usage(format!("{}: {e}", path.display())),
    })?;
    let sub = find_subcommand(root, &argv);
    let globals = long_flags(root);
    let mut global_args = Vec::new();
    let mut sub_args = Vec::new();
    for (section, props) in ini.iter() {
        match section {
            None | Some("global") => expand("global", props, &globals, &argv, &mut global_args)?,
            Some(name) => {
                let Some(cmd) = root.find_subcommand(name) else {
                    return Err(CliError::Usage(format!("unknown section [{name}] in {}", path.display())));
                };
                if sub.as_ref().is_some_and(|(_, s)| s == name) {
                    expand(name, props, &long_flags(cmd), &argv, &mut sub_args)?;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(argv.len() + global_args.len() + sub_args.len());
    match sub {
        Some((pos, _)) => {
            out.extend_from_slice(&argv[..pos]);
            out.extend(global_args);
            out.extend_from_slice(&argv[pos..]);
            out.extend(sub_args);
        }
        None => {
            out.extend(argv);
            out.extend(global_args);
        }
    }
    Ok(out)
}
