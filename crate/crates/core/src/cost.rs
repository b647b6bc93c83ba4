//! Analytic costs of the inference flows: DRAM traffic, recompute overhead, line and block
//! buffers, per-variant line-buffer and compute factors.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::BLOCK_BUFFER_OPERANDS;
use crate::geometry::{interior_tile_regions, tensor_dims};
use crate::model::{ModelSpec, Variant};
use crate::target::{Flow, HardwareTarget};
use crate::tensor::Kernel;

/// Bytes per second moved to and from DRAM when every internal conv output is written once and
/// read back once.
pub fn dram_bandwidth_layerwise(
    m: &ModelSpec,
    width: usize,
    height: usize,
    fps: u64,
    bytes_per_feature: u64,
) -> Result<u64> {
    let dims = tensor_dims(m, height, width)?;
    let last_conv = m.layers.iter().rposition(|l| l.kind.is_conv());
    let per_frame: u64 = m
        .layers
        .iter()
        .enumerate()
        .filter(|(i, l)| l.kind.is_conv() && Some(*i) != last_conv)
        .map(|(i, _)| {
            let d = dims[i + 1];
            2 * (d.pixels() * d.channels) as u64 * bytes_per_feature
        })
        .sum();
    Ok(per_frame * fps)
}

fn check_pyramid(depth: usize, s_in: usize) -> Result<()> {
    if 2 * depth >= s_in {
        return Err(Error::PyramidCollapse {
            depth,
            block: s_in,
        });
    }
    Ok(())
}

/// Continuous approximation of the extra work of a truncated pyramid over its output.
pub fn recompute_overhead_closed(depth: usize, s_in: usize) -> Result<f64> {
    check_pyramid(depth, s_in)?;
    Ok(closed_form(depth as f64 / s_in as f64))
}

/// `(2/3) b (3 - 4b) / (1 - 2b)^2`.
pub fn closed_form(beta: f64) -> f64 {
    2.0 / 3.0 * beta * (3.0 - 4.0 * beta) / ((1.0 - 2.0 * beta) * (1.0 - 2.0 * beta))
}

/// Discrete count: layer `k` of a plain pyramid computes `(S_in - 2k)^2` pixels.
pub fn recompute_overhead_exact_ratio(depth: usize, s_in: usize) -> Result<Ratio<u64>> {
    check_pyramid(depth, s_in)?;
    if depth == 0 {
        return Ok(Ratio::from_integer(0));
    }
    let out = ((s_in - 2 * depth) as u64).pow(2);
    let total: u64 = (1..=depth).map(|k| ((s_in - 2 * k) as u64).pow(2)).sum();
    let base = depth as u64 * out;
    Ok(Ratio::new(total - base, base))
}

pub fn recompute_overhead_exact(depth: usize, s_in: usize) -> Result<f64> {
    Ok(ratio_f64(recompute_overhead_exact_ratio(depth, s_in)?))
}

pub fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn layer_extent(m: &ModelSpec, n: usize, layer_tensor: usize) -> Result<Ratio<u64>> {
    let scales = m.tensor_scales()?;
    Ok(scales[layer_tensor] / m.scale * n as u64)
}

/// Line-buffer bytes of the reuse flow: for every 3x3 conv, two rows over the layer width and
/// two columns over the block height of its input, in that layer's resolution. `image_width`
/// and `block` are output-domain pixels.
pub fn line_buffer_bytes(
    m: &ModelSpec,
    image_width: usize,
    block: usize,
    bytes_per_feature: u64,
) -> Result<u64> {
    let mut total = Ratio::from_integer(0u64);
    for (i, l) in m.layers.iter().enumerate() {
        if l.kind.kernel() == Some(Kernel::K3) {
            let w = layer_extent(m, image_width, i)?;
            let s = layer_extent(m, block, i)?;
            total += (w + s) * (2 * l.in_channels as u64 * bytes_per_feature);
        }
    }
    Ok(total.ceil().to_integer())
}

/// Line buffer per equivalent 3x3 layer of E3R1, CONV3x3 (width `sqrt(R) C`), E3R3 and E1R3,
/// normalized to E3R1.
pub fn normalized_lb_ratios(r: f64) -> Result<(f64, f64, f64, f64)> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("expansion ratio {r} below 1")));
    }
    Ok((1.0, r.sqrt(), (1.0 + r) / 2.0, r))
}

/// Squares of [`normalized_lb_ratios`], exact for rational `R`.
pub fn normalized_lb_ratios_squared(
    r: Ratio<u64>,
) -> Result<(Ratio<u64>, Ratio<u64>, Ratio<u64>, Ratio<u64>)> {
    let one = Ratio::from_integer(1u64);
    if r < one {
        return Err(Error::InvalidArgument(format!("expansion ratio {r} below 1")));
    }
    let half = (one + r) / 2;
    Ok((one, r, half * half, r * r))
}

/// MACs of one module per equivalent 3x3 layer, relative to a plain 3x3 conv of width `sqrt(R) C`.
pub fn compute_factor(variant: Variant) -> Ratio<u64> {
    let k2 = |k: usize| (k * k) as u64;
    Ratio::new(
        k2(variant.expand_kernel()) + k2(variant.reduce_kernel()),
        9 * variant.depth() as u64,
    )
}

/// Largest aligned output tile whose required input extent fits in `s_in` input pixels.
pub fn recompute_output_tile(m: &ModelSpec, s_in: usize) -> Result<usize> {
    let align = m.output_block_alignment() as usize;
    let extent = |s: usize| interior_tile_regions(m, s)[0].width();
    if extent(align) > s_in {
        return Err(Error::PyramidCollapse {
            depth: m.depth(),
            block: s_in,
        });
    }
    // the extent grows by a fixed step per aligned increment
    let step = extent(2 * align) - extent(align);
    let s_out = (1 + (s_in - extent(align)) / step) * align;
    debug_assert!(extent(s_out) <= s_in && extent(s_out + align) > s_in);
    Ok(s_out)
}

/// Interior-tile geometry of the recompute flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PyramidGeometry {
    pub s_in: usize,
    pub s_out: usize,
    /// Input-domain halo per side.
    pub halo: usize,
    /// MACs of one interior tile including recomputed halo features.
    pub tile_macs: u64,
}

impl PyramidGeometry {
    pub fn for_input_block(m: &ModelSpec, s_in: usize) -> Result<Self> {
        let s_out = recompute_output_tile(m, s_in)?;
        Ok(Self::for_output_tile(m, s_out))
    }

    pub fn for_output_tile(m: &ModelSpec, s_out: usize) -> Self {
        let req = interior_tile_regions(m, s_out);
        let tile_macs = m
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind.is_conv())
            .map(|(i, l)| req[i + 1].area() as u64 * l.macs_per_pixel())
            .sum();
        let s_in = req[0].width();
        let core = (m.tensor_scales().expect("validated")[0] / m.scale * s_out as u64).to_integer() as usize;
        Self {
            s_in,
            s_out,
            halo: (s_in - core) / 2,
            tile_macs,
        }
    }

    /// `halo / S_in`, the pyramid slope in input pixels.
    pub fn beta(&self) -> f64 {
        self.halo as f64 / self.s_in as f64
    }

    /// Interior-tile overhead over the output's own MACs.
    pub fn overhead(&self, m: &ModelSpec) -> Ratio<u64> {
        let base = m.macs_per_output_pixel() * (self.s_out * self.s_out) as u64;
        Ratio::from_integer(self.tile_macs) / base - 1
    }
}

/// Required MACs per second of a frame processed tile by tile, with the interior tile's cost
/// spread evenly over the frame's output pixels.
pub fn recompute_required_rate(geo: &PyramidGeometry, out_pixels: u64, fps: u64) -> Ratio<u128> {
    Ratio::new(
        geo.tile_macs as u128 * out_pixels as u128 * fps as u128,
        (geo.s_out * geo.s_out) as u128,
    )
}

pub fn reuse_required_rate(m: &ModelSpec, out_pixels: u64, fps: u64) -> Ratio<u128> {
    let mpp = m.macs_per_output_pixel();
    Ratio::new(
        *mpp.numer() as u128 * out_pixels as u128 * fps as u128,
        *mpp.denom() as u128,
    )
}

/// Per-frame MAC overhead of the recompute flow over the whole image, border tiles included.
pub fn frame_recompute_overhead(m: &ModelSpec, width: usize, height: usize, s_out: usize) -> Result<Ratio<u64>> {
    let dims = tensor_dims(m, height, width)?;
    let out = *dims.last().unwrap();
    let whole: u64 = m
        .layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind.is_conv())
        .map(|(i, l)| dims[i + 1].pixels() as u64 * l.macs_per_pixel())
        .sum();
    if whole == 0 {
        return Ok(Ratio::from_integer(0));
    }
    let mut total = 0u64;
    for ty in (0..out.height).step_by(s_out) {
        for tx in (0..out.width).step_by(s_out) {
            let tile = crate::geometry::Region::span(
                tx as i64,
                ty as i64,
                (tx + s_out).min(out.width) as i64,
                (ty + s_out).min(out.height) as i64,
            );
            let req = crate::geometry::backward_regions(m, Some(&dims), tile);
            total += m
                .layers
                .iter()
                .enumerate()
                .filter(|(_, l)| l.kind.is_conv())
                .map(|(i, l)| req[i + 1].area() as u64 * l.macs_per_pixel())
                .sum::<u64>();
        }
    }
    Ok(Ratio::new(total - whole, whole))
}

/// Three-operand block buffer: operand count times the largest per-tensor tile footprint.
/// Recompute tiles are the unclipped pyramid levels of an `s_out` output tile; reuse tiles are
/// `s_out` scaled to each tensor's resolution.
pub fn block_buffer_bytes(
    m: &ModelSpec,
    s_out: usize,
    bytes_per_feature: u64,
    flow: Flow,
    n_operands: u64,
) -> Result<u64> {
    let channels = m.tensor_channels();
    let peak = match flow {
        Flow::Recompute => interior_tile_regions(m, s_out)
            .iter()
            .zip(&channels)
            .map(|(r, &c)| (r.area() * c) as u64)
            .max()
            .unwrap_or(0),
        Flow::Reuse => {
            let mut peak = 0u64;
            for (t, &c) in channels.iter().enumerate() {
                let side = layer_extent(m, s_out, t)?.ceil().to_integer();
                peak = peak.max(side * side * c as u64);
            }
            peak
        }
    };
    Ok(n_operands * peak * bytes_per_feature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Compute,
    LineBuffer,
    None,
}

impl std::fmt::Display for Binding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Binding::Compute => "compute",
            Binding::LineBuffer => "line_buffer",
            Binding::None => "none",
        })
    }
}

/// Outcome of checking one model against one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// First violated constraint, `None` when feasible.
    pub violated: Binding,
    pub required_macs_per_second: Ratio<u128>,
    pub line_buffer_bytes: u64,
    pub block_buffer_bytes: u64,
    /// Output tile of the recompute flow; equals the block size for reuse.
    pub tile: usize,
    pub reason: Option<String>,
}

pub fn check_feasible(m: &ModelSpec, t: &HardwareTarget) -> Result<Feasibility> {
    t.validate()?;
    let bpf = t.bytes_per_feature;
    let lb = line_buffer_bytes(m, t.out_width, t.block_size, bpf)?;
    let within_budget = |req: &Ratio<u128>| match t.compute_budget {
        None => true,
        Some(b) => *req.numer() <= b as u128 * *req.denom(),
    };
    match t.flow {
        Flow::Recompute => {
            let geo = match PyramidGeometry::for_input_block(m, t.block_size) {
                Ok(g) => g,
                Err(Error::PyramidCollapse { depth, block }) => {
                    return Ok(Feasibility {
                        feasible: false,
                        violated: Binding::Compute,
                        required_macs_per_second: Ratio::from_integer(0),
                        line_buffer_bytes: 0,
                        block_buffer_bytes: 0,
                        tile: 0,
                        reason: Some(format!(
                            "pyramid collapse: {depth} 3x3 layers leave no output pixel in a {block}-pixel input block"
                        )),
                    })
                }
                Err(e) => return Err(e),
            };
            let req = recompute_required_rate(&geo, t.out_pixels(), t.fps);
            let ok = within_budget(&req);
            Ok(Feasibility {
                feasible: ok,
                violated: if ok { Binding::None } else { Binding::Compute },
                required_macs_per_second: req,
                line_buffer_bytes: 0,
                block_buffer_bytes: block_buffer_bytes(m, geo.s_out, bpf, Flow::Recompute, BLOCK_BUFFER_OPERANDS)?,
                tile: geo.s_out,
                reason: None,
            })
        }
        Flow::Reuse => {
            let req = reuse_required_rate(m, t.out_pixels(), t.fps);
            let violated = if !within_budget(&req) {
                Binding::Compute
            } else if t.line_buffer_limit.is_some_and(|l| lb > l) {
                Binding::LineBuffer
            } else {
                Binding::None
            };
            Ok(Feasibility {
                feasible: violated == Binding::None,
                violated,
                required_macs_per_second: req,
                line_buffer_bytes: lb,
                block_buffer_bytes: block_buffer_bytes(m, t.block_size, bpf, Flow::Reuse, BLOCK_BUFFER_OPERANDS)?,
                tile: t.block_size,
                reason: None,
            })
        }
    }
}

/// Costs of one model on one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub model: String,
    pub target: String,
    pub flow: Flow,
    pub depth: usize,
    pub params: u64,
    pub macs_per_pixel: Ratio<u64>,
    pub dram_bytes_per_second: u64,
    pub block_size: usize,
    /// Output tile of the recompute pyramid built on `block_size` input pixels.
    pub recompute_s_out: Option<usize>,
    pub recompute_s_in: Option<usize>,
    pub beta: Option<f64>,
    pub recompute_overhead_closed: Option<f64>,
    pub recompute_overhead_interior: Option<Ratio<u64>>,
    /// Frame-level overhead, border tiles included; zero when one tile covers the frame.
    pub recompute_overhead_ratio: Option<Ratio<u64>>,
    pub line_buffer_bytes: u64,
    pub block_buffer_bytes: u64,
    /// Weight bytes if all parameters are reloaded once per block.
    pub weight_reload_bytes_per_frame: u64,
    pub required_macs_per_second: Ratio<u128>,
    pub compute_budget: Option<u64>,
    pub line_buffer_limit: Option<u64>,
    pub feasible: bool,
    pub violated: Binding,
    pub reason: Option<String>,
}

pub fn cost_report(m: &ModelSpec, t: &HardwareTarget) -> Result<CostReport> {
    let f = check_feasible(m, t)?;
    let bpf = t.bytes_per_feature;
    let in_scale = m.tensor_scales()?[0] / m.scale;
    let in_w = (in_scale * t.out_width as u64).to_integer() as usize;
    let in_h = (in_scale * t.out_height as u64).to_integer() as usize;
    let geo = PyramidGeometry::for_input_block(m, t.block_size).ok();
    let (frame_overhead, closed) = match &geo {
        Some(g) => (
            Some(frame_recompute_overhead(m, in_w, in_h, g.s_out)?),
            Some(closed_form(g.beta())),
        ),
        None => (None, None),
    };
    let tile = match t.flow {
        Flow::Recompute => geo.map(|g| g.s_out).unwrap_or(0),
        Flow::Reuse => t.block_size,
    };
    let blocks = if tile == 0 {
        0
    } else {
        (t.out_width.div_ceil(tile) * t.out_height.div_ceil(tile)) as u64
    };
    Ok(CostReport {
        model: m.name.clone(),
        target: t.name.clone(),
        flow: t.flow,
        depth: m.depth(),
        params: m.param_count(),
        macs_per_pixel: m.macs_per_output_pixel(),
        dram_bytes_per_second: dram_bandwidth_layerwise(m, in_w, in_h, t.fps, bpf)?,
        block_size: t.block_size,
        recompute_s_out: geo.map(|g| g.s_out),
        recompute_s_in: geo.map(|g| g.s_in),
        beta: geo.map(|g| g.beta()),
        recompute_overhead_closed: closed,
        recompute_overhead_interior: geo.map(|g| g.overhead(m)),
        recompute_overhead_ratio: frame_overhead,
        line_buffer_bytes: line_buffer_bytes(m, t.out_width, t.block_size, bpf)?,
        block_buffer_bytes: f.block_buffer_bytes,
        weight_reload_bytes_per_frame: m.param_count() * blocks * bpf,
        required_macs_per_second: f.required_macs_per_second,
        compute_budget: t.compute_budget,
        line_buffer_limit: t.line_buffer_limit,
        feasible: f.feasible,
        violated: f.violated,
        reason: f.reason,
    })
}

/// Decimal megabytes.
pub fn mb(bytes: u64) -> f64 {
    bytes as f64 / 1e6
}

fn fmt_ratio64(r: &Ratio<u64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{:.6}", ratio_f64(*r))
    }
}

fn fmt_ratio128(r: &Ratio<u128>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{:.3}", *r.numer() as f64 / *r.denom() as f64)
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl CostReport {
    pub const KEYS: [&'static str; 26] = [
        "model",
        "target",
        "flow",
        "depth",
        "params",
        "macs_per_pixel",
        "dram_bytes_per_second",
        "dram_gb_per_second",
        "block_size",
        "recompute_s_in",
        "recompute_s_out",
        "beta",
        "recompute_overhead_closed",
        "recompute_overhead_interior",
        "recompute_overhead_ratio",
        "line_buffer_bytes",
        "line_buffer_mb",
        "block_buffer_bytes",
        "block_buffer_mb",
        "weight_reload_bytes_per_frame",
        "required_macs_per_second",
        "compute_budget",
        "line_buffer_limit",
        "feasible",
        "violated",
        "reason",
    ];

    /// Values in [`CostReport::KEYS`] order.
    pub fn values(&self) -> [String; 26] {
        let f6 = |v: Option<f64>| v.map_or("none".into(), |b| format!("{b:.6}"));
        [
            self.model.clone(),
            self.target.clone(),
            self.flow.to_string(),
            self.depth.to_string(),
            self.params.to_string(),
            fmt_ratio64(&self.macs_per_pixel),
            self.dram_bytes_per_second.to_string(),
            format!("{:.2}", self.dram_bytes_per_second as f64 / 1e9),
            self.block_size.to_string(),
            opt(&self.recompute_s_in),
            opt(&self.recompute_s_out),
            f6(self.beta),
            f6(self.recompute_overhead_closed),
            self.recompute_overhead_interior.as_ref().map_or("none".into(), fmt_ratio64),
            self.recompute_overhead_ratio.as_ref().map_or("none".into(), fmt_ratio64),
            self.line_buffer_bytes.to_string(),
            format!("{:.3}", mb(self.line_buffer_bytes)),
            self.block_buffer_bytes.to_string(),
            format!("{:.3}", mb(self.block_buffer_bytes)),
            self.weight_reload_bytes_per_frame.to_string(),
            fmt_ratio128(&self.required_macs_per_second),
            opt(&self.compute_budget),
            opt(&self.line_buffer_limit),
            self.feasible.to_string(),
            self.violated.to_string(),
            self.reason.clone().unwrap_or_else(|| "none".into()),
        ]
    }

    /// Flat `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn csv_header() -> String {
        Self::KEYS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values()
            .into_iter()
            .map(|v| if v.contains(',') { format!("\"{v}\"") } else { v })
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chain_model, build_ermodule, build_ffdnet_star, build_plain, ChainCfg, LayerSpec, TapId};
    use proptest::prelude::*;

    #[test]
    fn ffdnet_star_bandwidth() {
        let m = build_ffdnet_star(12, 96, 3).unwrap();
        let bw = dram_bandwidth_layerwise(&m, 3840, 2160, 30, 1).unwrap();
        assert_eq!(bw, 2 * 1920 * 1080 * 96 * 11 * 30);
        assert_eq!(bw, 131_383_296_000);
        assert_eq!(dram_bandwidth_layerwise(&m, 3840, 2160, 0, 1).unwrap(), 0);
        let single = ModelSpec::new("one", 3, vec![LayerSpec::conv3x3(3, 3)]).unwrap();
        assert_eq!(dram_bandwidth_layerwise(&single, 64, 64, 30, 1).unwrap(), 0);
    }

    #[test]
    fn overhead_formulas() {
        assert!((recompute_overhead_closed(20, 128).unwrap() - 0.52342).abs() < 1e-5);
        assert!((recompute_overhead_closed(40, 128).unwrap() - 2.59259).abs() < 1e-5);
        assert_eq!(recompute_overhead_closed(0, 128).unwrap(), 0.0);
        assert!((recompute_overhead_exact(20, 128).unwrap() - 0.49561).abs() < 1e-5);
        assert_eq!(recompute_overhead_exact_ratio(1, 8).unwrap(), Ratio::from_integer(0));
        assert!(matches!(
            recompute_overhead_closed(64, 128),
            Err(Error::PyramidCollapse { .. })
        ));
        assert!(recompute_overhead_exact(4, 8).is_err());
    }

    #[test]
    fn line_buffer_examples() {
        let plain = build_plain(12, 96, 15).unwrap();
        assert_eq!(line_buffer_bytes(&plain, 1920, 0, 1).unwrap(), 2 * 1920 * (15 + 11 * 96));
        let chain = build_chain_model(&ChainCfg::new(Variant::E3R1, 10, 4, 0).unwrap()).unwrap();
        assert_eq!(line_buffer_bytes(&chain, 960, 64, 1).unwrap(), 655_360);
        let pointwise = ModelSpec::new("pw", 4, vec![LayerSpec::conv1x1(4, 4)]).unwrap();
        assert_eq!(line_buffer_bytes(&pointwise, 960, 64, 1).unwrap(), 0);
    }

    #[test]
    fn ffdnet_star_line_buffer_in_half_resolution() {
        let m = build_ffdnet_star(12, 96, 3).unwrap();
        // full-res 3840 output is 1920 wide inside, input channels 12 then 96
        let lb = line_buffer_bytes(&m, 3840, 0, 1).unwrap();
        assert_eq!(lb, 2 * 1920 * (12 + 11 * 96));
    }

    #[test]
    fn variant_ratios() {
        assert_eq!(normalized_lb_ratios(4.0).unwrap(), (1.0, 2.0, 2.5, 4.0));
        assert_eq!(normalized_lb_ratios(1.0).unwrap(), (1.0, 1.0, 1.0, 1.0));
        assert!(normalized_lb_ratios(0.5).is_err());
        let sq = normalized_lb_ratios_squared(Ratio::from_integer(4)).unwrap();
        assert_eq!(sq, (Ratio::from_integer(1), Ratio::from_integer(4), Ratio::new(25, 4), Ratio::from_integer(16)));
        assert_eq!(compute_factor(Variant::E3R1), Ratio::new(10, 9));
        assert_eq!(compute_factor(Variant::E1R3), Ratio::new(10, 9));
        assert_eq!(compute_factor(Variant::E3R3), Ratio::from_integer(1));
    }

    #[test]
    fn module_macs_match_factor() {
        let layers = build_ermodule(Variant::E3R1, 32, 4, false, TapId(0)).unwrap();
        let macs: u64 = layers.iter().map(LayerSpec::macs_per_pixel).sum();
        assert_eq!(macs, 40_960);
        assert_eq!(Ratio::new(macs, 36_864), compute_factor(Variant::E3R1));
    }

    #[test]
    fn block_buffer_examples() {
        let chain = build_chain_model(&ChainCfg::new(Variant::E3R1, 3, 4, 0).unwrap()).unwrap();
        assert_eq!(block_buffer_bytes(&chain, 32, 1, Flow::Reuse, 3).unwrap(), 393_216);
        let ffd = build_ffdnet_star(12, 96, 3).unwrap();
        assert_eq!(block_buffer_bytes(&ffd, 32, 1, Flow::Reuse, 3).unwrap(), 3 * 16 * 16 * 96);
        let a = block_buffer_bytes(&chain, 16, 1, Flow::Reuse, 3).unwrap();
        assert_eq!(4 * a, block_buffer_bytes(&chain, 32, 1, Flow::Reuse, 3).unwrap());
        // recompute tiles carry the halo
        let rec = block_buffer_bytes(&chain, 32, 1, Flow::Recompute, 3).unwrap();
        assert_eq!(rec, 3 * 36 * 36 * 128);
    }

    #[test]
    fn pyramid_geometry_plain() {
        let m = build_plain(20, 4, 4).unwrap();
        let g = PyramidGeometry::for_input_block(&m, 128).unwrap();
        assert_eq!((g.s_in, g.s_out, g.halo), (128, 88, 20));
        assert_eq!(g.overhead(&m), recompute_overhead_exact_ratio(20, 128).unwrap());
        assert!(PyramidGeometry::for_input_block(&m, 40).is_err());
        assert_eq!(recompute_output_tile(&m, 41).unwrap(), 1);
    }

    #[test]
    fn pyramid_geometry_shuffled() {
        let m = build_ffdnet_star(12, 96, 3).unwrap();
        let g = PyramidGeometry::for_input_block(&m, 128).unwrap();
        assert_eq!((g.s_in, g.s_out, g.halo), (128, 80, 24));
        let g = PyramidGeometry::for_input_block(&m, 129).unwrap();
        assert_eq!(g.s_out, 80);
    }

    #[test]
    fn frame_overhead_vanishes_for_one_tile() {
        let m = build_plain(3, 4, 4).unwrap();
        assert_eq!(frame_recompute_overhead(&m, 32, 32, 32).unwrap(), Ratio::from_integer(0));
        assert!(frame_recompute_overhead(&m, 32, 32, 8).unwrap() > Ratio::from_integer(0));
    }

    #[test]
    fn report_renders() {
        let m = build_ffdnet_star(12, 96, 3).unwrap();
        let t = HardwareTarget {
            name: "uhd".into(),
            out_width: 3840,
            out_height: 2160,
            fps: 30,
            compute_budget: None,
            line_buffer_limit: Some(4_000_000),
            block_size: 128,
            bytes_per_feature: 1,
            flow: Flow::Reuse,
        };
        let r = cost_report(&m, &t).unwrap();
        assert_eq!(r.dram_bytes_per_second, 131_383_296_000);
        assert!(!r.feasible);
        assert_eq!(r.violated, Binding::LineBuffer);
        let text = r.to_text();
        assert!(text.contains("dram_gb_per_second = 131.38"));
        assert_eq!(CostReport::csv_header().split(',').count(), r.csv_row().split(',').count());
    }

    proptest! {
        #[test]
        fn closed_and_exact_are_increasing_in_depth(s in 16usize..300, d in 1usize..60) {
            prop_assume!(2 * (d + 1) < s);
            prop_assert!(recompute_overhead_closed(d + 1, s).unwrap() > recompute_overhead_closed(d, s).unwrap());
            prop_assert!(recompute_overhead_exact_ratio(d + 1, s).unwrap() > recompute_overhead_exact_ratio(d, s).unwrap());
        }

        #[test]
        fn lb_ratio_ordering(r in 1.0f64..64.0) {
            let (a, b, c, d) = normalized_lb_ratios(r).unwrap();
            prop_assert!(a <= b && b <= c && c <= d);
        }

        #[test]
        fn compute_factor_matches_macs(c in prop::sample::select(vec![8usize, 32]), r in 1usize..7, v in 0usize..3) {
            let variant = Variant::ALL[v];
            let macs: u64 = build_ermodule(variant, c, r, false, TapId(0)).unwrap().iter().map(LayerSpec::macs_per_pixel).sum();
            let equiv = 9 * (r * c * c) as u64 * variant.depth() as u64;
            prop_assert_eq!(Ratio::new(macs, equiv), compute_factor(variant));
        }
    }
}
