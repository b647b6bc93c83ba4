use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expansion-reduction module variant: kernel of the expanding conv, then of the reducing conv.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    E3R1,
    E1R3,
    E3R3,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::E3R1, Variant::E1R3, Variant::E3R3];

    pub fn expand_kernel(self) -> usize {
        match self {
            Variant::E3R1 | Variant::E3R3 => 3,
            Variant::E1R3 => 1,
        }
    }

    pub fn reduce_kernel(self) -> usize {
        match self {
            Variant::E1R3 | Variant::E3R3 => 3,
            Variant::E3R1 => 1,
        }
    }

    /// 3x3 layers per module.
    pub fn depth(self) -> usize {
        usize::from(self.expand_kernel() == 3) + usize::from(self.reduce_kernel() == 3)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::E3R1 => "E3R1",
            Variant::E1R3 => "E1R3",
            Variant::E3R3 => "E3R3",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E3R1" => Ok(Variant::E3R1),
            "E1R3" => Ok(Variant::E1R3),
            "E3R3" => Ok(Variant::E3R3),
            _ => Err(Error::InvalidName(s.to_string())),
        }
    }
}

pub const DEFAULT_WIDTH: usize = 32;

/// A chain of `blocks` modules; the first `extra` use ratio `base_ratio + 1`, the rest `base_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCfg {
    pub variant: Variant,
    pub blocks: usize,
    pub base_ratio: usize,
    pub extra: usize,
    pub width: usize,
    pub relu_before_residual: bool,
}

impl ChainCfg {
    pub fn new(variant: Variant, blocks: usize, base_ratio: usize, extra: usize) -> Result<Self> {
        let cfg = Self {
            variant,
            blocks,
            base_ratio,
            extra,
            width: DEFAULT_WIDTH,
            relu_before_residual: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }

    pub fn with_relu_before_residual(mut self, on: bool) -> Self {
        self.relu_before_residual = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::InvalidArgument("chain needs at least one module".into()));
        }
        if self.base_ratio == 0 {
            return Err(Error::InvalidArgument("expansion ratio must be at least 1".into()));
        }
        if self.extra >= self.blocks {
            return Err(Error::InvalidArgument(format!(
                "N = {} must be smaller than B = {}",
                self.extra, self.blocks
            )));
        }
        if self.width == 0 {
            return Err(Error::InvalidArgument("chain width must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_ratio(&self) -> Ratio<u64> {
        Ratio::from_integer(self.base_ratio as u64) + Ratio::new(self.extra as u64, self.blocks as u64)
    }

    /// Per-module expansion ratios in chain order.
    pub fn module_ratios(&self) -> Vec<usize> {
        (0..self.blocks)
            .map(|i| self.base_ratio + usize::from(i < self.extra))
            .collect()
    }

    /// 3x3 layers in the chain.
    pub fn depth(&self) -> usize {
        self.blocks * self.variant.depth()
    }
}

/// `R_I + N/B` as an exact rational.
pub fn effective_expansion_ratio(blocks: usize, base_ratio: usize, extra: usize) -> Result<Ratio<u64>> {
    Ok(ChainCfg::new(Variant::E3R1, blocks, base_ratio, extra)?.effective_ratio())
}

impl fmt::Display for ChainCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-B{}R{}N{}",
            self.variant, self.blocks, self.base_ratio, self.extra
        )
    }
}

impl FromStr for ChainCfg {
    type Err = Error;

    /// Parses `E3R1-B28R3N9` style names.
    fn from_str(s: &str) -> Result<Self> {
        parse_model_name(s)
    }
}

pub fn parse_model_name(s: &str) -> Result<ChainCfg> {
    let bad = || Error::InvalidName(s.to_string());
    let (variant, rest) = s.split_once('-').ok_or_else(bad)?;
    if variant.len() != 4 {
        return Err(bad());
    }
    let variant: Variant = variant.parse().map_err(|_| bad())?;
    let rest = rest.strip_prefix('B').ok_or_else(bad)?;
    let (blocks, rest) = split_number(rest).ok_or_else(bad)?;
    let rest = rest.strip_prefix('R').ok_or_else(bad)?;
    let (ratio, rest) = split_number(rest).ok_or_else(bad)?;
    let rest = rest.strip_prefix('N').ok_or_else(bad)?;
    let (extra, rest) = split_number(rest).ok_or_else(bad)?;
    if !rest.is_empty() {
        return Err(bad());
    }
    ChainCfg::new(variant, blocks, ratio, extra).map_err(|_| bad())
}

/// Leading decimal digits without sign or leading zeros (except a lone `0`).
fn split_number(s: &str) -> Option<(usize, &str)> {
    let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let digits = &s[..end];
    if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
        return None;
    }
    Some((digits.parse().ok()?, &s[end..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn named_configurations() {
        let r = effective_expansion_ratio(28, 3, 9).unwrap();
        assert_eq!(r, Ratio::new(93, 28));
        assert!((*r.numer() as f64 / *r.denom() as f64 - 3.321).abs() < 1e-3);
        assert_eq!(effective_expansion_ratio(23, 4, 0).unwrap(), Ratio::from_integer(4));
        let r = effective_expansion_ratio(61, 3, 25).unwrap();
        assert_eq!(r, Ratio::new(3 * 61 + 25, 61));
        assert!((*r.numer() as f64 / *r.denom() as f64 - 3.410).abs() < 1e-3);
    }

    #[test]
    fn n_must_be_below_b() {
        assert!(effective_expansion_ratio(4, 2, 4).is_err());
        assert!(effective_expansion_ratio(4, 0, 1).is_err());
        assert!(effective_expansion_ratio(0, 1, 0).is_err());
    }

    #[test]
    fn module_ratios_front_loaded() {
        let cfg = ChainCfg::new(Variant::E3R3, 4, 3, 2).unwrap();
        assert_eq!(cfg.module_ratios(), vec![4, 4, 3, 3]);
        let cfg = ChainCfg::new(Variant::E3R3, 5, 2, 0).unwrap();
        assert_eq!(cfg.module_ratios(), vec![2; 5]);
    }

    #[test]
    fn parse_examples() {
        let c = parse_model_name("E3R1-B28R3N9").unwrap();
        assert_eq!((c.variant, c.blocks, c.base_ratio, c.extra), (Variant::E3R1, 28, 3, 9));
        let c = parse_model_name("E3R3-B5R2N0").unwrap();
        assert_eq!((c.variant, c.blocks, c.base_ratio, c.extra), (Variant::E3R3, 5, 2, 0));
    }

    #[test]
    fn parse_rejects_malformed() {
        for s in [
            "", "E3R1", "E2R1-B4R1N0", "E3R1-B4R1", "E3R1-B4R1N0x", "E3R1-B04R1N0", "E3R1B4R1N0",
            "E3R1-B4R1N4", "E3R1-B-4R1N0", "E3R1-B4R0N0",
        ] {
            assert!(parse_model_name(s).is_err(), "{s:?} should be rejected");
        }
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(v in 0usize..3, b in 1usize..200, r in 1usize..20, n_seed in any::<usize>()) {
            let cfg = ChainCfg::new(Variant::ALL[v], b, r, n_seed % b).unwrap();
            let name = cfg.to_string();
            let back = parse_model_name(&name).unwrap();
            prop_assert_eq!(back, cfg);
            prop_assert_eq!(back.to_string(), name);
        }

        #[test]
        fn exactly_n_modules_get_the_larger_ratio(b in 1usize..100, r in 1usize..10, n_seed in any::<usize>()) {
            let cfg = ChainCfg::new(Variant::E3R1, b, r, n_seed % b).unwrap();
            let ratios = cfg.module_ratios();
            prop_assert_eq!(ratios.iter().filter(|&&x| x == r + 1).count(), cfg.extra);
            prop_assert_eq!(ratios.len(), b);
            let total: usize = ratios.iter().sum();
            prop_assert_eq!(Ratio::new(total as u64, b as u64), cfg.effective_ratio());
        }
    }
}
