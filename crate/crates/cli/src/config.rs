//! `key = value` run files.
//!
//! ```text
//! # comment
//! command = study-space
//! problem = dirichlet-manufactured
//! scheme = hoc
//! mu = 0.4
//! exact-error = true
//! out = report.csv
//! ```
//!
//! `command` is required. Every other key is a long option name of that
//! command (`_` and `-` are interchangeable). Boolean flags take `true` or
//! `false`; lists are comma-separated.

use anyhow::{anyhow, bail};

const BOOLEAN_KEYS: [&str; 1] = ["exact-error"];

/// Translates a config file into command-line arguments (without argv[0]).
pub fn to_args(text: &str) -> anyhow::Result<Vec<String>> {
    let mut command = None;
    let mut rest = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            anyhow!(
                "config line {}: expected `key = value`, got `{line}`",
                n + 1
            )
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            bail!("config line {}: empty key or value", n + 1);
        }
        if !seen.insert(key.clone()) {
            bail!("config line {}: duplicate key `{key}`", n + 1);
        }
        if key == "command" {
            command = Some(value.to_string());
        } else if key == "config" {
            bail!(
                "config line {}: config files cannot include other config files",
                n + 1
            );
        } else if BOOLEAN_KEYS.contains(&key.as_str()) {
            match value {
                "true" => rest.push(format!("--{key}")),
                "false" => {}
                other => bail!(
                    "config line {}: `{key}` must be true or false, got `{other}`",
                    n + 1
                ),
            }
        } else {
            rest.push(format!("--{key}"));
            rest.push(value.to_string());
        }
    }
    let command = command.ok_or_else(|| anyhow!("config file has no `command` key"))?;
    let mut args = vec![command];
    args.extend(rest);
    Ok(args)
}
