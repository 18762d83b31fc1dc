//! `--config` files: one `key = value` per line, keys named like the long
//! flags. The pairs are spliced in right after the subcommand, so anything
//! given on the command line comes later and overrides them.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::bail;

use crate::commands::Failure;

/// Flags that take no value; `key = true` turns them on.
const SWITCHES: [&str; 2] = ["pred-relative", "point"];

/// Returns `argv` with the config file's flags inserted, or `argv` itself
/// when there is no `--config`. An unreadable file is an input error, a
/// malformed one a usage error.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some((path, sub)) = locate(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Input(anyhow::anyhow!("reading config {}: {e}", path.display())))?;
    let flags = parse(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
    let mut out = argv;
    out.splice(sub + 1..sub + 1, flags);
    Ok(out)
}

/// Config path and index of the subcommand token.
fn locate(argv: &[OsString]) -> Option<(PathBuf, usize)> {
    let mut path = None;
    let mut sub = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if arg == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if sub.is_none() && !arg.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    Some((path?, sub?))
}

fn parse(text: &str) -> anyhow::Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected 'key = value', got '{line}'", n + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            bail!("line {}: bad key '{key}'", n + 1);
        }
        if SWITCHES.contains(&key.as_str()) {
            match value {
                "true" => flags.push(format!("--{key}").into()),
                "false" => {}
                other => bail!("line {}: '{key}' takes true or false, got '{other}'", n + 1),
            }
        } else {
            flags.push(format!("--{key}").into());
            flags.push(value.into());
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_switches() {
        let flags = parse("# solver\nlambda = 2.5\ncg_tol=1e-6  # tight\npoint = true\npred-relative = false\n").unwrap();
        assert_eq!(flags, os(&["--lambda", "2.5", "--cg-tol", "1e-6", "--point"]));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("lambda 2").is_err());
        assert!(parse("point = yes").is_err());
        assert!(parse("config = x").is_err());
    }

    #[test]
    fn finds_subcommand_around_config() {
        let argv = os(&["depthcomp", "--config", "c.txt", "complete", "--lambda", "3"]);
        assert_eq!(locate(&argv), Some((PathBuf::from("c.txt"), 3)));
        let argv = os(&["depthcomp", "complete", "--config=c.txt"]);
        assert_eq!(locate(&argv), Some((PathBuf::from("c.txt"), 1)));
        assert_eq!(locate(&os(&["depthcomp", "complete"])), None);
    }
}
