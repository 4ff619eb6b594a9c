//! Config resolution: a TOML file, then `--set KEY=VALUE` overrides, then
//! `--seed`. Flags always win over the file, and a seed must come from one
//! of them — there is no default seed.

use anyhow::{Context, Result};
use layoutgcn::pipeline::PipelineConfig;

use crate::{ConfigArgs, UsageError};

/// Parse one `--set` value with TOML's scalar rules, falling back to a bare
/// string so `--set pooling=max` works without inner quotes.
fn parse_override(raw: &str) -> toml::Value {
    if let Ok(t) = format!("v = {raw}").parse::<toml::Table>() {
        return t["v"].clone();
    }
    toml::Value::String(raw.trim().to_string())
}

pub fn resolve(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut table = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| layoutgcn::Error::io(path, e))
                .context("reading config file")?;
            body.parse::<toml::Table>().map_err(|e| {
                layoutgcn::Error::Data(format!("{} is not valid TOML: {e}", path.display()))
            })?
        }
        None => toml::Table::new(),
    };
    for entry in &args.set {
        let Some((key, value)) = entry.split_once('=') else {
            return Err(UsageError(format!("--set takes KEY=VALUE, got {entry:?}")).into());
        };
        table.insert(key.trim().to_string(), parse_override(value));
    }

    // Through JSON so a u64 seed survives (TOML integers are i64).
    let mut json = serde_json::to_value(&table)
        .map_err(|e| layoutgcn::Error::Data(format!("config does not map to JSON: {e}")))?;
    if let Some(seed) = args.seed {
        json["seed"] = seed.into();
    }
    if json.get("seed").is_none() {
        return Err(UsageError(
            "a seed is required: pass --seed or set seed in the config file".into(),
        )
        .into());
    }
    let config: PipelineConfig = serde_json::from_value(json)
        .map_err(|e| layoutgcn::Error::Data(format!("bad config: {e}")))?;
    Ok(config)
}
