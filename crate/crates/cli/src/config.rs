//! `--config` files: flat TOML tables whose keys are the long flag names with `_` for `-`.
//! A key given on the command line replaces the same key from the file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

const KNOWN_KEYS: &[&str] = &[
    "model",
    "family",
    "chain",
    "depth",
    "width",
    "image_channels",
    "resblocks",
    "relu_before_residual",
    "seed",
    "block_size",
    "bytes_per_feature",
    "target",
    "out",
    "format",
    "input",
    "size",
    "flow",
    "raw",
    "variant",
    "b_min",
    "b_max",
    "r_max",
    "budget",
    "line_buffer_limit",
    "unlimited",
];

pub fn load(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .with_context(|| format!("parsing config {}", path.display()))?;
    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("unknown config key {key:?} in {}", path.display());
        }
    }
    Ok(table)
}

/// Overlays the flags in `args` on `config` and reads the result back.
pub fn merge<T: Serialize + DeserializeOwned + Clone>(args: &T, config: Option<&toml::Table>) -> Result<T> {
    let Some(config) = config else {
        return Ok(args.clone());
    };
    let mut merged = config.clone();
    merged.extend(toml::Table::try_from(args)?);
    merged.try_into().context("config values do not fit the command")
}

pub fn is_false(b: &bool) -> bool {
    !*b
}
