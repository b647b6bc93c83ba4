//! Hardware targets: frame format, throughput, compute budget and on-chip buffer limits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    Recompute,
    Reuse,
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flow::Recompute => "recompute",
            Flow::Reuse => "reuse",
        })
    }
}

impl FromStr for Flow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "recompute" => Ok(Flow::Recompute),
            "reuse" => Ok(Flow::Reuse),
            _ => Err(Error::InvalidArgument(format!("unknown flow {s:?}"))),
        }
    }
}

/// `block_size` is the input block width for the recompute flow (the pyramid base) and the
/// output block width for the reuse flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareTarget {
    pub name: String,
    pub out_width: usize,
    pub out_height: usize,
    pub fps: u64,
    /// MACs per second; absent means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_buffer_limit: Option<u64>,
    pub block_size: usize,
    #[serde(default = "one")]
    pub bytes_per_feature: u64,
    pub flow: Flow,
}

fn one() -> u64 {
    1
}

impl HardwareTarget {
    pub fn validate(&self) -> Result<()> {
        if self.out_width == 0 || self.out_height == 0 {
            return Err(Error::InvalidArgument("target frame must be non-empty".into()));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        if self.bytes_per_feature == 0 {
            return Err(Error::InvalidArgument("bytes per feature must be positive".into()));
        }
        Ok(())
    }

    pub fn out_pixels(&self) -> u64 {
        (self.out_width * self.out_height) as u64
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("target serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let t: Self = toml::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let t = HardwareTarget {
            name: "x".into(),
            out_width: 64,
            out_height: 32,
            fps: 30,
            compute_budget: Some(1_000_000),
            line_buffer_limit: None,
            block_size: 16,
            bytes_per_feature: 2,
            flow: Flow::Reuse,
        };
        let s = t.to_toml();
        assert!(s.contains("flow = \"reuse\""));
        assert!(!s.contains("line_buffer_limit"));
        assert_eq!(HardwareTarget::from_toml(&s).unwrap(), t);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let base = "name = \"t\"\nout_width = 8\nout_height = 8\nfps = 1\nblock_size = 4\nflow = \"reuse\"\n";
        let t = HardwareTarget::from_toml(base).unwrap();
        assert_eq!((t.compute_budget, t.bytes_per_feature), (None, 1));
        assert!(HardwareTarget::from_toml(&format!("{base}bogus = 1\n")).is_err());
        assert!(HardwareTarget::from_toml(&base.replace("block_size = 4", "block_size = 0")).is_err());
        assert!("sideways".parse::<Flow>().is_err());
    }
}
