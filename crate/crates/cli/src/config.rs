//! `key=value` configuration files. Keys are long flag names of the chosen
//! subcommand; flags given on the command line take precedence.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::{Cli, CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> CliResult<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", i + 1)));
        }
        out.push(Entry {
            key,
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> CliResult<Option<(usize, usize, OsString)>> {
    for (i, a) in argv.iter().enumerate().skip(1) {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            let path = argv
                .get(i + 1)
                .ok_or_else(|| CliError::usage("--config needs a file"))?;
            return Ok(Some((i, 2, path.clone())));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some((i, 1, OsString::from(p))));
        }
    }
    Ok(None)
}

/// Turn config entries into flags for `subcommand`.
fn entries_to_flags(entries: &[Entry], subcommand: &str) -> CliResult<Vec<OsString>> {
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| CliError::usage(format!("unknown subcommand `{subcommand}`")))?;
    let args: Vec<&clap::Arg> = sub.get_arguments().chain(cmd.get_arguments()).collect();
    let mut flags = Vec::new();
    for e in entries {
        let arg = args
            .iter()
            .find(|a| a.get_long() == Some(e.key.as_str()))
            .filter(|_| e.key != "config" && e.key != "help" && e.key != "version")
            .ok_or_else(|| CliError::usage(format!("config line {}: unknown key `{}`", e.line, e.key)))?;
        if arg.get_action().takes_values() {
            flags.push(OsString::from(format!("--{}={}", e.key, e.value)));
        } else {
            match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => flags.push(OsString::from(format!("--{}", e.key))),
                "false" | "no" | "0" => {}
                _ => {
                    return Err(CliError::usage(format!(
                        "config line {}: `{}` expects true or false",
                        e.line, e.key
                    )))
                }
            }
        }
    }
    Ok(flags)
}

/// Splice config-file flags in front of the user's flags so that the
/// latter override them.
pub fn expand(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some((idx, width, path)) = config_path(&argv)? else {
        return Ok(argv);
    };
    let mut rest = argv;
    rest.drain(idx..idx + width);
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| ost_core::Error::Io {
        path: path.clone().into(),
        source: e,
    })?;
    let entries = parse(&text)?;
    let names: Vec<String> = Cli::command().get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(sub_idx) = rest.iter().position(|a| names.iter().any(|n| a.to_str() == Some(n))) else {
        return Ok(rest);
    };
    let sub = rest[sub_idx].to_string_lossy().into_owned();
    let flags = entries_to_flags(&entries, &sub)?;
    let mut out = Vec::with_capacity(rest.len() + flags.len());
    out.push(rest[0].clone());
    out.push(rest[sub_idx].clone());
    out.extend(flags);
    out.extend(rest[1..sub_idx].iter().cloned());
    out.extend(rest[sub_idx + 1..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parse_lines() {
        let e = parse("# comment\n\nepsilon0 = 3\nlambda_e=10\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "epsilon0");
        assert_eq!(e[1].key, "lambda-e");
        assert_eq!(e[1].value, "10");
        assert!(parse("epsilon0 3").is_err());
        assert!(parse("=3").is_err());
    }

    #[test]
    fn flags_follow_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "bins = 8\nframes=3\n").unwrap();
        let argv = os(&["ost", "--config", p.to_str().unwrap(), "bench", "--bins", "16"]);
        let out = expand(argv).unwrap();
        assert_eq!(out, os(&["ost", "bench", "--bins=8", "--frames=3", "--bins", "16"]));
    }

    #[test]
    fn switches_and_unknown_keys() {
        let e = parse("power=true\nno-octave-scaling=false\n").unwrap();
        assert_eq!(entries_to_flags(&e, "transcribe").unwrap(), os(&["--power"]));
        let e = parse("nonsense=1\n").unwrap();
        assert!(matches!(entries_to_flags(&e, "transcribe"), Err(CliError::Usage(_))));
        let e = parse("power=maybe\n").unwrap();
        assert!(entries_to_flags(&e, "transcribe").is_err());
    }

    #[test]
    fn missing_config_is_a_data_error() {
        let err = expand(os(&["ost", "--config", "/nonexistent/x.conf", "bench"])).unwrap_err();
        assert_eq!(err.exit_code(), crate::EXIT_DATA);
    }
}
