use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::patch::{apply_layer, Patch};
use super::{check_input, BlockSchedule, FlowCounters, BLOCK_BUFFER_OPERANDS};
use crate::error::Result;
use crate::geometry::{backward_regions, tensor_dims, Region};
use crate::model::{LayerKind, Network};
use crate::tensor::FeatureMap;

/// Per-tile record of the recompute flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileTrace {
    /// Output tile.
    pub tile: Region,
    /// Input pixels fetched for the tile, clipped to the image.
    pub input_region: Region,
    pub macs: u64,
}

/// Truncated-pyramid inference: every output tile is computed from its own input region, so
/// halo features shared between neighbours are computed once per tile that needs them.
pub fn infer_block_recompute(
    net: &Network,
    img: &FeatureMap,
    sched: &BlockSchedule,
) -> Result<(FeatureMap, FlowCounters)> {
    let (out, counters, _) = infer_block_recompute_traced(net, img, sched)?;
    Ok((out, counters))
}

pub fn infer_block_recompute_traced(
    net: &Network,
    img: &FeatureMap,
    sched: &BlockSchedule,
) -> Result<(FeatureMap, FlowCounters, Vec<TileTrace>)> {
    check_input(net, img)?;
    let spec = net.spec();
    sched.validate_for(spec)?;
    let dims = tensor_dims(spec, img.height(), img.width())?;
    let weights = net.layer_weights();
    let out_dims = *dims.last().unwrap();
    let mut output = FeatureMap::zeros(out_dims.height, out_dims.width, out_dims.channels)?;
    let mut counters = FlowCounters::default();
    let mut traces = Vec::new();
    let s = sched.block_size;
    let bpf = sched.bytes_per_feature;

    for ty in (0..out_dims.height).step_by(s) {
        for tx in (0..out_dims.width).step_by(s) {
            let tile = Region::span(
                tx as i64,
                ty as i64,
                (tx + s).min(out_dims.width) as i64,
                (ty + s).min(out_dims.height) as i64,
            );
            let req = backward_regions(spec, Some(&dims), tile);
            let peak = req
                .iter()
                .zip(&dims)
                .map(|(r, d)| (r.area() * d.channels) as u64)
                .max()
                .unwrap_or(0);
            counters.block_buffer_peak_bytes =
                counters.block_buffer_peak_bytes.max(BLOCK_BUFFER_OPERANDS * peak * bpf);

            let mut taps: HashMap<_, Patch> = HashMap::new();
            let mut cur = Patch::from_map(img, req[0]);
            let mut macs = 0u64;
            for (l, layer) in spec.layers.iter().enumerate() {
                let bounds = dims[l].bounds();
                let target = req[l + 1];
                let next = {
                    let mut input = |r: Region| cur.gather(r, bounds);
                    let mut tap = |r: Region| match layer.kind {
                        LayerKind::ResidualAddFrom { id } => taps[&id].gather(r, r),
                        _ => unreachable!("only residual adds read taps"),
                    };
                    apply_layer(layer, weights[l], target, &mut input, &mut tap)
                };
                if let Some(w) = weights[l] {
                    macs += target.area() as u64 * w.macs_per_pixel();
                }
                if let LayerKind::Tap { id } = layer.kind {
                    taps.insert(id, next.clone());
                }
                cur = next;
            }
            debug_assert_eq!(cur.region, tile);
            cur.write_into(&mut output);
            counters.macs_total += macs;
            traces.push(TileTrace {
                tile,
                input_region: req[0],
                macs,
            });
        }
    }
    Ok((output, counters, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::infer_whole;
    use crate::model::build_plain;

    #[test]
    fn matches_whole_and_discrete_pyramid_count() {
        let (d, c, s) = (4usize, 8usize, 16usize);
        let net = Network::seeded(build_plain(d, c, 1).unwrap(), 11);
        let img = FeatureMap::random(48, 48, 1, 12).unwrap();
        let (reference, _) = infer_whole(&net, &img, 1).unwrap();
        let (out, _, traces) = infer_block_recompute_traced(&net, &img, &BlockSchedule::new(s)).unwrap();
        assert!(out.bit_eq(&reference));
        // the centre tile is interior: each layer k (1-based) computes (S + 2(D - k))^2 pixels
        let centre = traces
            .iter()
            .find(|t| t.tile == Region::span(16, 16, 32, 32))
            .unwrap();
        let s_in = s + 2 * d;
        let per_layer = |k: usize, cin: usize, cout: usize| ((s_in - 2 * k).pow(2) * 9 * cin * cout) as u64;
        let expect = per_layer(1, 1, c) + per_layer(2, c, c) + per_layer(3, c, c) + per_layer(4, c, c);
        assert_eq!(centre.macs, expect);
        assert_eq!(centre.input_region.width(), s_in);
    }

    #[test]
    fn single_block_degenerates_to_whole() {
        let net = Network::seeded(build_plain(3, 4, 2).unwrap(), 1);
        let img = FeatureMap::random(20, 12, 2, 5).unwrap();
        let (a, ca) = infer_whole(&net, &img, 1).unwrap();
        let (b, cb) = infer_block_recompute(&net, &img, &BlockSchedule::new(20)).unwrap();
        assert!(a.bit_eq(&b));
        assert_eq!(ca.macs_total, cb.macs_total);
        assert_eq!(cb.line_buffer_peak_bytes, 0);
        assert_eq!(cb.dram_feature_bytes, 0);
    }

    #[test]
    fn ragged_tiles() {
        let net = Network::seeded(build_plain(2, 3, 1).unwrap(), 1);
        let img = FeatureMap::random(13, 7, 1, 5).unwrap();
        let (a, _) = infer_whole(&net, &img, 1).unwrap();
        let (b, _) = infer_block_recompute(&net, &img, &BlockSchedule::new(5)).unwrap();
        assert!(a.bit_eq(&b));
    }
}
