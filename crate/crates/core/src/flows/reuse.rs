//! Oblique-cuboid inference.
//!
//! Each tensor is cut into a grid of partitions, one per output tile. A partition holds the
//! features that become computable once the tile's input block has arrived: along each axis a
//! 3x3 conv can only advance to one pixel before the end of its input, so partitions shift
//! left and up with depth while keeping the block size. Features that later partitions still
//! need are kept in two caches per tensor:
//!
//! * a row cache with the last `lag` rows over the full tensor width,
//! * a column cache with the last `lag` columns of the current band of rows, including the
//!   `lag` rows above the band.
//!
//! `lag` is derived from the partition ends and is 2 for the input of a 3x3 conv in steady
//! state, 0 for tensors consumed only point-wise.

use super::patch::{apply_layer, Patch};
use super::{check_input, BlockSchedule, FlowCounters, BLOCK_BUFFER_OPERANDS};
use crate::error::{Error, Result};
use crate::geometry::{backward_regions, tensor_dims, Region, TensorDims};
use crate::model::{LayerKind, ModelSpec, Network};
use crate::tensor::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

impl Axis {
    fn len(self, d: &TensorDims) -> usize {
        match self {
            Axis::X => d.width,
            Axis::Y => d.height,
        }
    }
}

/// Partition ends of every tensor along one axis. `ends[t][i]` is the exclusive end of
/// partition `i` of tensor `t`.
fn partition_ends(
    spec: &ModelSpec,
    dims: &[TensorDims],
    axis: Axis,
    block: usize,
) -> Result<Vec<Vec<usize>>> {
    let n = spec.layers.len();
    let out = dims[n];
    let out_len = axis.len(&out);
    let tiles = out_len.div_ceil(block);
    let taps = spec.tap_layers();
    let mut ends = vec![Vec::with_capacity(tiles); n + 1];
    for i in 0..tiles {
        let out_end = ((i + 1) * block).min(out_len);
        // input extent that fixes the first i + 1 output tiles along this axis
        let e0 = match axis {
            Axis::X => {
                let probe = Region::span(0, 0, out_end as i64, out.height as i64);
                backward_regions(spec, Some(dims), probe)[0].x1
            }
            Axis::Y => {
                let probe = Region::span(0, 0, out.width as i64, out_end as i64);
                backward_regions(spec, Some(dims), probe)[0].y1
            }
        } as usize;
        ends[0].push(e0);
        for (l, layer) in spec.layers.iter().enumerate() {
            let e_in = ends[l][i];
            let len_in = axis.len(&dims[l]);
            let len_out = axis.len(&dims[l + 1]);
            let e = match layer.kind {
                LayerKind::Conv3x3 => {
                    if e_in >= len_in {
                        len_out
                    } else {
                        e_in.saturating_sub(1)
                    }
                }
                LayerKind::Conv1x1 | LayerKind::Relu | LayerKind::Tap { .. } => e_in,
                LayerKind::ResidualAddFrom { id } => {
                    let t = taps[&id];
                    if spec.is_input_tap(t) {
                        e_in
                    } else {
                        e_in.min(ends[t + 1][i])
                    }
                }
                LayerKind::PixelShuffle { factor } => e_in * factor,
                LayerKind::PixelUnshuffle { factor } => {
                    if e_in >= len_in {
                        len_out
                    } else {
                        e_in / factor
                    }
                }
            };
            ends[l + 1].push(e);
        }
        if ends[n][i] < out_end {
            return Err(Error::Shape(format!(
                "partition schedule reaches {} of {out_end} output pixels",
                ends[n][i]
            )));
        }
    }
    Ok(ends)
}

/// First coordinate of tensor `t` read by a consumer whose own partition starts at `s`.
fn need_start(kind: &LayerKind, s: usize) -> usize {
    match *kind {
        LayerKind::Conv3x3 => s.saturating_sub(1),
        LayerKind::PixelShuffle { factor } => s / factor,
        LayerKind::PixelUnshuffle { factor } => s * factor,
        _ => s,
    }
}

/// Rows/columns of each tensor that must survive from one partition to the next.
fn lags(spec: &ModelSpec, ends: &[Vec<usize>]) -> Vec<usize> {
    let n = spec.layers.len();
    let taps = spec.tap_layers();
    let mut lag = vec![0usize; n + 1];
    let tiles = ends[0].len();
    for i in 1..tiles {
        for (l, layer) in spec.layers.iter().enumerate() {
            let start_out = ends[l + 1][i - 1];
            let need = need_start(&layer.kind, start_out);
            lag[l] = lag[l].max(ends[l][i - 1].saturating_sub(need));
            if let LayerKind::ResidualAddFrom { id } = layer.kind {
                let t = taps[&id];
                if !spec.is_input_tap(t) {
                    lag[t + 1] = lag[t + 1].max(ends[t + 1][i - 1].saturating_sub(start_out));
                }
            }
        }
    }
    lag
}

/// One tensor's current partition plus its caches.
struct Stream {
    dims: TensorDims,
    lag: usize,
    current: Patch,
    /// `lag` slots of full-width rows, slot `y % lag`.
    rows: Vec<f64>,
    /// Valid cached rows per column.
    row_valid: Vec<usize>,
    /// `lag` slots of column segments covering rows `[col_y0, col_y0 + col_rows)`, slot `x % lag`.
    cols: Vec<f64>,
    col_y0: i64,
    col_rows: usize,
    col_cols_valid: usize,
}

impl Stream {
    fn new(dims: TensorDims, lag: usize) -> Self {
        Self {
            dims,
            lag,
            current: Patch::zeros(Region::EMPTY, dims.channels),
            rows: vec![0.0; lag * dims.width * dims.channels],
            row_valid: vec![0; dims.width],
            cols: Vec::new(),
            col_y0: 0,
            col_rows: 0,
            col_cols_valid: 0,
        }
    }

    fn start_band(&mut self, ys: usize, ye: usize) {
        if self.lag == 0 {
            return;
        }
        self.col_y0 = ys.saturating_sub(self.lag) as i64;
        self.col_rows = ye - self.col_y0 as usize;
        self.cols = vec![0.0; self.lag * self.col_rows * self.dims.channels];
        self.col_cols_valid = 0;
    }

    fn row_slot(&self, x: i64, y: i64) -> usize {
        (((y as usize) % self.lag) * self.dims.width + x as usize) * self.dims.channels
    }

    fn col_slot(&self, x: i64, y: i64) -> usize {
        (((x as usize) % self.lag) * self.col_rows + (y - self.col_y0) as usize) * self.dims.channels
    }

    fn read(&self, x: i64, y: i64) -> &[f64] {
        let p = self.current.region;
        let c = self.dims.channels;
        if x >= p.x0 && y >= p.y0 {
            self.current.pixel(x, y)
        } else if x < p.x0 {
            debug_assert!(x >= p.x0 - self.lag as i64 && y >= self.col_y0);
            let i = self.col_slot(x, y);
            &self.cols[i..i + c]
        } else {
            debug_assert!(y >= p.y0 - self.lag as i64);
            let i = self.row_slot(x, y);
            &self.rows[i..i + c]
        }
    }

    /// Window of this tensor; zeros outside the tensor.
    fn gather(&self, r: Region) -> Patch {
        let mut out = Patch::zeros(r, self.dims.channels);
        let inner = r.intersect(&self.dims.bounds());
        let p = self.current.region;
        let c = self.dims.channels;
        for y in inner.y0..inner.y1 {
            let split = if y >= p.y0 { p.x0.clamp(inner.x0, inner.x1) } else { inner.x1 };
            for x in inner.x0..split {
                out.pixel_mut(x, y).copy_from_slice(self.read(x, y));
            }
            if split < inner.x1 {
                let len = (inner.x1 - split) as usize * c;
                let src = ((y - p.y0) as usize * p.width() + (split - p.x0) as usize) * c;
                let dst = ((y - r.y0) as usize * r.width() + (split - r.x0) as usize) * c;
                out.data[dst..dst + len].copy_from_slice(&self.current.data[src..src + len]);
            }
        }
        out
    }

    /// Moves the tail of the current partition into the caches: columns first, since the
    /// column cache takes its corner rows from the row cache before that is overwritten.
    fn retire(&mut self) {
        if self.lag == 0 {
            return;
        }
        let p = self.current.region;
        let c = self.dims.channels;
        let lag = self.lag as i64;
        if p.x1 > p.x0 {
            let mut cols = std::mem::take(&mut self.cols);
            for x in (p.x1 - lag).max(p.x0)..p.x1 {
                for y in self.col_y0..self.col_y0 + self.col_rows as i64 {
                    let i = self.col_slot(x, y);
                    cols[i..i + c].copy_from_slice(self.read(x, y));
                }
            }
            self.cols = cols;
            self.col_cols_valid = self.lag.min(p.x1 as usize);
        }
        if p.y1 > p.y0 {
            for y in (p.y1 - lag).max(p.y0)..p.y1 {
                for x in p.x0..p.x1 {
                    let i = self.row_slot(x, y);
                    self.rows[i..i + c].copy_from_slice(self.current.pixel(x, y));
                }
            }
            for x in p.x0..p.x1 {
                self.row_valid[x as usize] = self.lag.min(p.y1 as usize);
            }
        }
    }

    fn cached_features(&self) -> u64 {
        if self.lag == 0 {
            return 0;
        }
        let rows: usize = self.row_valid.iter().sum();
        ((rows + self.col_cols_valid * self.col_rows) * self.dims.channels) as u64
    }
}

/// Oblique-cuboid inference: features are computed exactly once and the halo shared with later
/// tiles is kept in row and column caches.
///
/// Caches of tensors read by a 3x3 conv count as line buffer; the remaining caches (ahead of
/// pixel shuffles and residual adds) are reported as skip buffer. A residual add from the model
/// input re-reads the input pixels from DRAM.
pub fn infer_block_reuse(
    net: &Network,
    img: &FeatureMap,
    sched: &BlockSchedule,
) -> Result<(FeatureMap, FlowCounters)> {
    check_input(net, img)?;
    let spec = net.spec();
    sched.validate_for(spec)?;
    let dims = tensor_dims(spec, img.height(), img.width())?;
    let weights = net.layer_weights();
    let n = spec.layers.len();
    let s = sched.block_size;
    let bpf = sched.bytes_per_feature;
    let ex = partition_ends(spec, &dims, Axis::X, s)?;
    let ey = partition_ends(spec, &dims, Axis::Y, s)?;
    let lag_x = lags(spec, &ex);
    let lag_y = lags(spec, &ey);
    let lag: Vec<usize> = lag_x.iter().zip(&lag_y).map(|(a, b)| *a.max(b)).collect();
    let line_tensor: Vec<bool> = (0..=n)
        .map(|t| t < n && matches!(spec.layers[t].kind, LayerKind::Conv3x3))
        .collect();
    let taps = spec.tap_layers();

    let mut streams: Vec<Stream> = dims.iter().zip(&lag).map(|(d, &l)| Stream::new(*d, l)).collect();
    let out_dims = dims[n];
    let mut output = FeatureMap::zeros(out_dims.height, out_dims.width, out_dims.channels)?;
    let mut counters = FlowCounters::default();
    let start = |e: &Vec<usize>, i: usize| if i == 0 { 0 } else { e[i - 1] };

    for by in 0..ey[0].len() {
        for (t, st) in streams.iter_mut().enumerate() {
            st.start_band(start(&ey[t], by), ey[t][by]);
        }
        for bx in 0..ex[0].len() {
            let part = |t: usize| {
                Region::span(
                    start(&ex[t], bx) as i64,
                    start(&ey[t], by) as i64,
                    ex[t][bx] as i64,
                    ey[t][by] as i64,
                )
            };
            streams[0].current = Patch::from_map(img, part(0));
            let mut block_peak = (part(0).area() * dims[0].channels) as u64;
            for (l, layer) in spec.layers.iter().enumerate() {
                let target = part(l + 1);
                let (before, after) = streams.split_at_mut(l + 1);
                let src = &before[l];
                let tap_stream = match layer.kind {
                    LayerKind::ResidualAddFrom { id } => Some(taps[&id]),
                    _ => None,
                };
                let mut input = |r: Region| src.gather(r);
                let mut tap = |r: Region| {
                    let t = tap_stream.expect("only residual adds read taps");
                    if spec.is_input_tap(t) {
                        Patch::from_map(img, r)
                    } else {
                        before[t + 1].gather(r)
                    }
                };
                let out = apply_layer(layer, weights[l], target, &mut input, &mut tap);
                if let Some(w) = weights[l] {
                    counters.macs_total += target.area() as u64 * w.macs_per_pixel();
                }
                if let Some(t) = tap_stream {
                    if spec.is_input_tap(t) {
                        counters.dram_feature_bytes +=
                            (target.area() * dims[t].channels) as u64 * bpf;
                    }
                }
                block_peak = block_peak.max((target.area() * dims[l + 1].channels) as u64);
                after[0].current = out;
            }
            counters.block_buffer_peak_bytes = counters
                .block_buffer_peak_bytes
                .max(BLOCK_BUFFER_OPERANDS * block_peak * bpf);
            streams[n].current.write_into(&mut output);

            let (mut line, mut skip) = (0u64, 0u64);
            for (t, st) in streams.iter_mut().enumerate() {
                st.retire();
                if line_tensor[t] {
                    line += st.cached_features();
                } else {
                    skip += st.cached_features();
                }
            }
            counters.line_buffer_peak_bytes = counters.line_buffer_peak_bytes.max(line * bpf);
            counters.skip_buffer_peak_bytes = counters.skip_buffer_peak_bytes.max(skip * bpf);
        }
    }
    Ok((output, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::infer_whole;
    use crate::model::{build_dnernet, build_plain, build_sr4ernet, ChainCfg, Variant};

    fn check(net: &Network, img: &FeatureMap, s: usize) -> FlowCounters {
        let (a, ca) = infer_whole(net, img, 1).unwrap();
        let (b, cb) = infer_block_reuse(net, img, &BlockSchedule::new(s)).unwrap();
        assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0);
        assert!(a.bit_eq(&b));
        assert_eq!(ca.macs_total, cb.macs_total);
        cb
    }

    #[test]
    fn plain_matches_whole() {
        let net = Network::seeded(build_plain(4, 3, 1).unwrap(), 3);
        for (h, w, s) in [(24, 24, 8), (13, 29, 5), (8, 8, 8), (9, 40, 4), (6, 6, 1)] {
            let img = FeatureMap::random(h, w, 1, 7).unwrap();
            check(&net, &img, s);
        }
    }

    #[test]
    fn plain_lags_are_two_before_3x3() {
        let spec = build_plain(3, 2, 1).unwrap();
        let dims = tensor_dims(&spec, 32, 32).unwrap();
        let ex = partition_ends(&spec, &dims, Axis::X, 8).unwrap();
        assert_eq!(ex[0], vec![11, 19, 27, 32]);
        assert_eq!(ex.last().unwrap(), &vec![8, 16, 24, 32]);
        let lag = lags(&spec, &ex);
        for (l, layer) in spec.layers.iter().enumerate() {
            let expect = if matches!(layer.kind, LayerKind::Conv3x3) { 2 } else { 0 };
            assert_eq!(lag[l], expect, "tensor {l}");
        }
    }

    #[test]
    fn dnernet_and_sr_match_whole() {
        let cfg = ChainCfg::new(Variant::E3R3, 2, 2, 1).unwrap().with_width(4);
        let net = Network::seeded(build_dnernet(&cfg, 3).unwrap(), 5);
        let img = FeatureMap::random(24, 36, 3, 1).unwrap();
        let c = check(&net, &img, 8);
        assert_eq!(c.dram_feature_bytes, 24 * 36 * 3);

        let cfg = ChainCfg::new(Variant::E1R3, 2, 1, 1).unwrap().with_width(4);
        let net = Network::seeded(build_sr4ernet(&cfg).unwrap(), 5);
        let img = FeatureMap::random(8, 12, 3, 1).unwrap();
        check(&net, &img, 8);
    }

    #[test]
    fn line_buffer_close_to_formula() {
        let (d, c, w, s) = (4usize, 4usize, 128usize, 8usize);
        let net = Network::seeded(build_plain(d, c, c).unwrap(), 3);
        let img = FeatureMap::random(32, w, c, 7).unwrap();
        let counters = check(&net, &img, s);
        let formula = 2 * (w + s) * (c + (d - 1) * c);
        let measured = counters.line_buffer_peak_bytes as f64;
        assert!((measured / formula as f64 - 1.0).abs() < 0.05, "{measured} vs {formula}");
    }
}
