//! Model selection flags shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use ernet::{
    build_chain_model, build_dnernet, build_edsr_baseline, build_ffdnet_star, build_plain,
    build_sr4ernet, parse_model_name, ModelSpec, Network,
};
use serde::{Deserialize, Serialize};

use crate::config::is_false;

pub const SPEC_FILE: &str = "model.json";
pub const WEIGHTS_FILE: &str = "weights.erwb";

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Directory written by `build`, or a model description JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "family")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,

    /// dnernet | sr4ernet | ffdnet-star | edsr-baseline | plain | chain
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,

    /// Chain name such as E3R1-B28R3N9 (dnernet, sr4ernet and chain families).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<String>,

    /// 3x3 layers (ffdnet-star, plain).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,

    /// Feature channels.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_channels: Option<usize>,

    /// Residual blocks (edsr-baseline).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resblocks: Option<usize>,

    /// Apply a ReLU before each module's residual add.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub relu_before_residual: bool,
}

impl ModelArgs {
    pub fn spec(&self) -> Result<ModelSpec> {
        if let Some(path) = &self.model {
            let file = spec_path(path);
            let text = fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            return ModelSpec::from_json(&text).with_context(|| format!("parsing {}", file.display()));
        }
        let family = match (&self.family, &self.chain) {
            (Some(f), _) => f.to_ascii_lowercase(),
            (None, Some(_)) => "dnernet".to_string(),
            (None, None) => bail!("give --model, --family or --chain"),
        };
        let chain = || -> Result<_> {
            let name = self
                .chain
                .as_deref()
                .with_context(|| format!("family {family} needs --chain"))?;
            let mut cfg = parse_model_name(name)?.with_relu_before_residual(self.relu_before_residual);
            if let Some(w) = self.width {
                cfg = cfg.with_width(w);
            }
            cfg.validate()?;
            Ok(cfg)
        };
        let spec = match family.as_str() {
            "dnernet" => build_dnernet(&chain()?, self.image_channels.unwrap_or(3))?,
            "sr4ernet" => build_sr4ernet(&chain()?)?,
            "chain" => build_chain_model(&chain()?)?,
            "ffdnet-star" | "ffdnet*" => build_ffdnet_star(
                self.depth.unwrap_or(12),
                self.width.unwrap_or(96),
                self.image_channels.unwrap_or(3),
            )?,
            "edsr-baseline" => {
                build_edsr_baseline(self.resblocks.unwrap_or(16), self.width.unwrap_or(64))?
            }
            "plain" => build_plain(
                self.depth.context("family plain needs --depth")?,
                self.width.unwrap_or(32),
                self.image_channels.unwrap_or(1),
            )?,
            other => bail!("unknown model family {other:?}"),
        };
        Ok(spec)
    }

    /// The model with weights from the built directory, or seeded from `seed`.
    pub fn network(&self, seed: u64) -> Result<Network> {
        let spec = self.spec()?;
        if let Some(dir) = self.model.as_deref().filter(|p| p.is_dir()) {
            let file = dir.join(WEIGHTS_FILE);
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            return Network::read_blob(spec, bytes.as_slice())
                .with_context(|| format!("loading {}", file.display()));
        }
        Ok(Network::seeded(spec, seed))
    }
}

fn spec_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(SPEC_FILE)
    } else {
        path.to_path_buf()
    }
}
