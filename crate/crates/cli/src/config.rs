//! `--config` files: TOML tables whose keys mirror the long flags.

use anyhow::{bail, Context, Result};
use std::path::Path;

/// Reads `path` and renders its keys as command-line arguments. Booleans
/// become bare switches (or vanish when false), arrays are comma-joined.
pub fn config_args(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => args.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                args.push(flag);
                args.push(parts.join(","));
            }
            other => {
                args.push(flag);
                args.push(scalar(&other)?);
            }
        }
    }
    Ok(args)
}

fn scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => bail!(ConfigError(format!("unsupported config value {other}"))),
    })
}

/// Malformed config content; reported like a bad flag.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Splices config-file arguments in right after the subcommand so any flag
/// given explicitly later on the command line wins.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            match it.next() {
                Some(p) => config = Some(p),
                None => bail!(ConfigError("--config needs a path".into())),
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let injected = config_args(Path::new(&path))?;
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map_or(rest.len(), |p| p + 2);
    rest.splice(at..at, injected);
    Ok(rest)
}
