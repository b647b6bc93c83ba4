//! Design-space scan: for each module count `B`, the largest effective expansion ratio that a
//! hardware target can afford.

use std::fmt;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::cost::{check_feasible, reuse_required_rate, Binding, PyramidGeometry};
use crate::error::{Error, Result};
use crate::model::{build_dnernet, build_ffdnet_star, build_sr4ernet, parse_model_name, ChainCfg, ModelSpec, Variant};
use crate::target::{Flow, HardwareTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    DnERNet,
    Sr4ERNet,
}

impl Family {
    pub fn build(self, cfg: &ChainCfg) -> Result<ModelSpec> {
        match self {
            Family::DnERNet => build_dnernet(cfg, 3),
            Family::Sr4ERNet => build_sr4ernet(cfg),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::DnERNet => "dnernet",
            Family::Sr4ERNet => "sr4ernet",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dnernet" => Ok(Family::DnERNet),
            "sr4ernet" => Ok(Family::Sr4ERNet),
            _ => Err(Error::InvalidArgument(format!("unknown scan family {s:?}"))),
        }
    }
}

/// Ceiling of a rate, as a budget that admits it exactly.
fn budget_for(rate: Ratio<u128>) -> u64 {
    rate.ceil().to_integer() as u64
}

fn recompute_rate(m: &ModelSpec, out_w: usize, out_h: usize, fps: u64, s_in: usize) -> u64 {
    let geo = PyramidGeometry::for_input_block(m, s_in).expect("baseline fits the block");
    budget_for(crate::cost::recompute_required_rate(&geo, (out_w * out_h) as u64, fps))
}

fn named(cfg: &str) -> ChainCfg {
    parse_model_name(cfg).expect("valid preset name")
}

pub const PRESET_NAMES: [&str; 4] = ["A", "B", "C", "E"];

/// Reconstructed targets. Every preset uses 128-pixel blocks and one byte per feature.
///
/// * A: Full HD 30 fps, recompute; budget = 12-layer 96-channel FFDNet* on that target.
/// * B: 4K UHD 30 fps, recompute; budget = 5-layer FFDNet* on that target.
/// * C: denoising Full HD 40 fps, reuse, 4.0 MB line buffer; budget = DnERNet-12ch
///   E3R1-B28R3N9 exactly.
/// * E: SR x4 to Full HD at 60 fps, reuse, 4.8 MB line buffer; budget = SR4ERNet
///   E3R1-B61R3N25 exactly.
pub fn preset(name: &str) -> Result<HardwareTarget> {
    let s = 128;
    let t = match name.to_ascii_uppercase().as_str() {
        "A" => {
            let base = build_ffdnet_star(12, 96, 3)?;
            HardwareTarget {
                name: "A (HD30, recompute)".into(),
                out_width: 1920,
                out_height: 1080,
                fps: 30,
                compute_budget: Some(recompute_rate(&base, 1920, 1080, 30, s)),
                line_buffer_limit: None,
                block_size: s,
                bytes_per_feature: 1,
                flow: Flow::Recompute,
            }
        }
        "B" => {
            let base = build_ffdnet_star(5, 96, 3)?;
            HardwareTarget {
                name: "B (UHD30, recompute)".into(),
                out_width: 3840,
                out_height: 2160,
                fps: 30,
                compute_budget: Some(recompute_rate(&base, 3840, 2160, 30, s)),
                line_buffer_limit: None,
                block_size: s,
                bytes_per_feature: 1,
                flow: Flow::Recompute,
            }
        }
        "C" => {
            let m = build_dnernet(&named("E3R1-B28R3N9"), 3)?;
            HardwareTarget {
                name: "C (denoise HD40, reuse, LB4.0)".into(),
                out_width: 1920,
                out_height: 1080,
                fps: 40,
                compute_budget: Some(budget_for(reuse_required_rate(&m, 1920 * 1080, 40))),
                line_buffer_limit: Some(4_000_000),
                block_size: s,
                bytes_per_feature: 1,
                flow: Flow::Reuse,
            }
        }
        "E" => {
            let m = build_sr4ernet(&named("E3R1-B61R3N25"))?;
            HardwareTarget {
                name: "E (SRx4 HD60, reuse, LB4.8)".into(),
                out_width: 1920,
                out_height: 1080,
                fps: 60,
                compute_budget: Some(budget_for(reuse_required_rate(&m, 1920 * 1080, 60))),
                line_buffer_limit: Some(4_800_000),
                block_size: s,
                bytes_per_feature: 1,
                flow: Flow::Reuse,
            }
        }
        _ => return Err(Error::InvalidArgument(format!("unknown target preset {name:?}"))),
    };
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub blocks: usize,
    pub base_ratio: usize,
    pub extra: usize,
    pub r_e: Ratio<u64>,
    /// 3x3 layers of the whole model.
    pub depth: usize,
    pub macs_per_pixel: Ratio<u64>,
    pub required_macs_per_second: Ratio<u128>,
    pub line_buffer_bytes: u64,
    pub block_buffer_bytes: u64,
    pub feasible: bool,
    /// For a feasible row, the constraint that stops the next larger ratio (`none` when the
    /// ratio range is exhausted); for an infeasible row, the one the smallest model violates.
    pub binding_constraint: Binding,
}

pub const CSV_HEADER: &str =
    "B,R_I,N,R_E,macs_per_pixel,required_macs_s,line_buffer_bytes,block_buffer_bytes,feasible,binding_constraint";

impl ScanRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.4},{},{},{},{},{}",
            self.blocks,
            self.base_ratio,
            self.extra,
            *self.r_e.numer() as f64 / *self.r_e.denom() as f64,
            *self.macs_per_pixel.numer() as f64 / *self.macs_per_pixel.denom() as f64,
            self.required_macs_per_second.ceil().to_integer(),
            self.line_buffer_bytes,
            self.block_buffer_bytes,
            self.feasible,
            self.binding_constraint
        )
    }
}

/// Candidates of one `B` in strictly descending `R_E`.
fn descending(blocks: usize, r_max: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=r_max)
        .rev()
        .flat_map(move |r| (0..blocks).rev().map(move |n| (r, n)))
}

/// The candidate just above `(r, n)` in `R_E`, if within range.
fn next_up(blocks: usize, r_max: usize, r: usize, n: usize) -> Option<(usize, usize)> {
    if n + 1 < blocks {
        Some((r, n + 1))
    } else if r < r_max {
        Some((r + 1, 0))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOptions {
    pub family: Family,
    pub variant: Variant,
    pub width: usize,
    pub blocks: RangeInclusive<usize>,
    pub r_max: usize,
}

/// One row per `B`: the largest feasible `R_E = R_I + N/B` with `R_I <= r_max`, found by
/// walking candidates in descending `R_E`.
pub fn scan(opts: &ScanOptions, target: &HardwareTarget) -> Result<Vec<ScanRow>> {
    if opts.blocks.is_empty() || *opts.blocks.start() == 0 {
        return Err(Error::InvalidArgument("B range must be non-empty and start at 1 or more".into()));
    }
    if opts.r_max == 0 {
        return Err(Error::InvalidArgument("R_max must be at least 1".into()));
    }
    target.validate()?;
    let build = |b: usize, r: usize, n: usize| -> Result<ModelSpec> {
        let cfg = ChainCfg::new(opts.variant, b, r, n)?.with_width(opts.width);
        opts.family.build(&cfg)
    };
    let mut rows = Vec::new();
    for b in opts.blocks.clone() {
        let mut found = None;
        for (r, n) in descending(b, opts.r_max) {
            let m = build(b, r, n)?;
            let f = check_feasible(&m, target)?;
            if f.feasible {
                found = Some((r, n, m, f));
                break;
            }
        }
        let row = match found {
            Some((r, n, m, f)) => {
                let binding = match next_up(b, opts.r_max, r, n) {
                    Some((r2, n2)) => check_feasible(&build(b, r2, n2)?, target)?.violated,
                    None => Binding::None,
                };
                make_row(b, r, n, &m, &f, true, binding)
            }
            None => {
                let m = build(b, 1, 0)?;
                let f = check_feasible(&m, target)?;
                make_row(b, 1, 0, &m, &f, false, f.violated)
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn make_row(
    b: usize,
    r: usize,
    n: usize,
    m: &ModelSpec,
    f: &crate::cost::Feasibility,
    feasible: bool,
    binding: Binding,
) -> ScanRow {
    ScanRow {
        blocks: b,
        base_ratio: r,
        extra: n,
        r_e: Ratio::from_integer(r as u64) + Ratio::new(n as u64, b as u64),
        depth: m.depth(),
        macs_per_pixel: m.macs_per_output_pixel(),
        required_macs_per_second: f.required_macs_per_second,
        line_buffer_bytes: f.line_buffer_bytes,
        block_buffer_bytes: f.block_buffer_bytes,
        feasible,
        binding_constraint: binding,
    }
}

pub fn rows_to_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Text report: the target as TOML, then one line per row with the model depth.
pub fn rows_to_text(opts: &ScanOptions, target: &HardwareTarget, rows: &[ScanRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# scan {} {} width {} R_max {}", opts.family, opts.variant, opts.width, opts.r_max);
    let _ = writeln!(s, "[target]");
    s.push_str(&target.to_toml());
    let _ = writeln!(s);
    let _ = writeln!(s, "# B  depth  R_I  N  R_E  feasible  binding  required_MAC/s  LB_MB");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>3}  {:>5}  {:>3}  {:>3}  {:.4}  {:<5}  {:<11}  {:.4e}  {:.3}",
            r.blocks,
            r.depth,
            r.base_ratio,
            r.extra,
            *r.r_e.numer() as f64 / *r.r_e.denom() as f64,
            r.feasible,
            r.binding_constraint.to_string(),
            *r.required_macs_per_second.numer() as f64 / *r.required_macs_per_second.denom() as f64,
            r.line_buffer_bytes as f64 / 1e6
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::line_buffer_bytes;

    fn opts(family: Family, blocks: RangeInclusive<usize>) -> ScanOptions {
        ScanOptions {
            family,
            variant: Variant::E3R1,
            width: 32,
            blocks,
            r_max: 6,
        }
    }

    #[test]
    fn descending_order_is_strict() {
        let v: Vec<_> = descending(4, 3).collect();
        assert_eq!(v.len(), 12);
        let re = |(r, n): (usize, usize)| Ratio::new(4 * r as u64 + n as u64, 4);
        assert!(v.windows(2).all(|w| re(w[0]) > re(w[1])));
        assert_eq!(next_up(4, 3, 2, 3), Some((3, 0)));
        assert_eq!(next_up(4, 3, 3, 3), None);
    }

    #[test]
    fn named_configurations_on_frontier() {
        let t = preset("C").unwrap();
        let rows = scan(&opts(Family::DnERNet, 28..=28), &t).unwrap();
        assert_eq!((rows[0].base_ratio, rows[0].extra), (3, 9));
        assert_eq!(rows[0].binding_constraint, Binding::Compute);
        let t = preset("E").unwrap();
        let rows = scan(&opts(Family::Sr4ERNet, 61..=61), &t).unwrap();
        assert_eq!((rows[0].base_ratio, rows[0].extra), (3, 25));
    }

    #[test]
    fn unlimited_target_reaches_r_max() {
        let mut t = preset("C").unwrap();
        t.compute_budget = None;
        t.line_buffer_limit = None;
        let rows = scan(&opts(Family::DnERNet, 1..=3), &t).unwrap();
        for r in rows {
            assert!(r.feasible);
            assert_eq!((r.base_ratio, r.extra), (6, r.blocks - 1));
            assert_eq!(r.binding_constraint, Binding::None);
        }
    }

    #[test]
    fn zero_budget_is_all_infeasible() {
        let mut t = preset("C").unwrap();
        t.compute_budget = Some(0);
        let rows = scan(&opts(Family::DnERNet, 1..=4), &t).unwrap();
        assert!(rows.iter().all(|r| !r.feasible && r.binding_constraint == Binding::Compute));
        assert!(rows.iter().all(|r| (r.base_ratio, r.extra) == (1, 0)));
    }

    #[test]
    fn line_buffer_bound_matches_inversion() {
        let mut t = preset("C").unwrap();
        t.compute_budget = None;
        t.line_buffer_limit = Some(1_000_000);
        let rows = scan(&opts(Family::DnERNet, 1..=20), &t).unwrap();
        let lb = |b| line_buffer_bytes(&build_dnernet(&named(&format!("E3R1-B{b}R1N0")), 3).unwrap(), 1920, 128, 1).unwrap();
        let bound = (1..=20).filter(|&b| lb(b) <= 1_000_000).max().unwrap();
        let last = rows.iter().filter(|r| r.feasible).map(|r| r.blocks).max().unwrap();
        assert_eq!(last, bound);
        assert!(rows.iter().filter(|r| !r.feasible).all(|r| r.binding_constraint == Binding::LineBuffer));
    }

    #[test]
    fn recompute_collapse_is_infeasible() {
        let t = preset("A").unwrap();
        let rows = scan(&opts(Family::DnERNet, 40..=40), &t).unwrap();
        assert!(!rows[0].feasible);
        assert_eq!(rows[0].binding_constraint, Binding::Compute);
    }

    #[test]
    fn csv_layout() {
        let t = preset("C").unwrap();
        let rows = scan(&opts(Family::DnERNet, 2..=3), &t).unwrap();
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 10);
    }

    #[test]
    fn presets_parse() {
        for p in PRESET_NAMES {
            let t = preset(p).unwrap();
            assert_eq!(HardwareTarget::from_toml(&t.to_toml()).unwrap(), t);
        }
        assert!(preset("D").is_err());
    }
}
