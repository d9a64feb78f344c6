//! `--config FILE` support: `key = value` lines become `--key value` flags.
//!
//! File entries are inserted right after the subcommand name, so flags given
//! on the command line override them. A value of `true` turns into a bare
//! switch and `false` drops the entry.

use std::ffi::OsString;
use std::fs;

pub fn parse_config(text: &str) -> Result<Vec<OsString>, String> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key", i + 1));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Expands every `--config FILE` / `--config=FILE` in `argv`.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut files = Vec::new();
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => files.push(iter.next().ok_or("--config needs a file path")?),
            Some(s) if s.starts_with("--config=") => files.push(s["--config=".len()..].into()),
            _ => rest.push(arg),
        }
    }
    if files.is_empty() {
        return Ok(rest);
    }
    // argv[0] is the program; the subcommand is the first non-flag argument.
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |p| p + 2);
    let mut inserted = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(|e| format!("cannot read config {}: {e}", file.to_string_lossy()))?;
        inserted.extend(parse_config(&text)?);
    }
    rest.splice(at..at, inserted);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn key_values_become_flags() {
        let args = parse_config("# settings\nsim = 2\nn=500\nout_dir = data # trailing\nsignificance = true\ntiming = false\n").unwrap();
        assert_eq!(strs(&args), ["--sim", "2", "--n", "500", "--out-dir", "data", "--significance"]);
        assert!(parse_config("oops").is_err());
    }

    #[test]
    fn inserted_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "n = 10\n").unwrap();
        let argv = ["maxeffect", "simulate", "--config", path.to_str().unwrap(), "--n", "20"]
            .map(OsString::from)
            .to_vec();
        assert_eq!(strs(&expand_config(argv).unwrap()), ["maxeffect", "simulate", "--n", "10", "--n", "20"]);
    }
}
