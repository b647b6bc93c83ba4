use std::collections::HashMap;

use super::{check_input, FlowCounters};
use crate::error::Result;
use crate::model::{LayerKind, Network};
use crate::tensor::{self, FeatureMap};

/// Layer-by-layer inference over the whole image with zero padding at the borders.
///
/// Every conv output except the last one is an internal feature map that goes to DRAM and comes
/// back, so `dram_feature_bytes` counts it twice. Nothing is held on chip across layers, so both
/// buffer peaks stay zero.
pub fn infer_whole(
    net: &Network,
    img: &FeatureMap,
    bytes_per_feature: u64,
) -> Result<(FeatureMap, FlowCounters)> {
    check_input(net, img)?;
    let spec = net.spec();
    let weights = net.layer_weights();
    let last_conv = spec.layers.iter().rposition(|l| l.kind.is_conv());
    let mut counters = FlowCounters::default();
    let mut taps: HashMap<_, FeatureMap> = HashMap::new();
    let mut cur = img.clone();
    for (i, layer) in spec.layers.iter().enumerate() {
        cur = match layer.kind {
            LayerKind::Conv3x3 | LayerKind::Conv1x1 => {
                let w = weights[i].expect("conv layer has weights");
                let h = w.kernel().halo();
                let padded = tensor::pad_zero(&cur, h, h, h, h);
                let out = tensor::conv2d_valid(&padded, w)?;
                let pixels = (out.height() * out.width()) as u64;
                counters.macs_total += pixels * w.macs_per_pixel();
                if Some(i) != last_conv {
                    counters.dram_feature_bytes +=
                        2 * pixels * out.channels() as u64 * bytes_per_feature;
                }
                out
            }
            LayerKind::Relu => tensor::relu(&cur),
            LayerKind::Tap { id } => {
                taps.insert(id, cur.clone());
                cur
            }
            LayerKind::ResidualAddFrom { id } => tensor::add(&cur, &taps[&id])?,
            LayerKind::PixelShuffle { factor } => tensor::pixel_shuffle(&cur, factor)?,
            LayerKind::PixelUnshuffle { factor } => tensor::pixel_unshuffle(&cur, factor)?,
        };
    }
    Ok((cur, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_ffdnet_star, build_plain, LayerSpec, ModelSpec};

    #[test]
    fn plain_dram_bytes() {
        let net = Network::seeded(build_plain(3, 2, 1).unwrap(), 1);
        let img = FeatureMap::random(16, 16, 1, 2).unwrap();
        let (out, c) = infer_whole(&net, &img, 1).unwrap();
        assert_eq!(out.shape(), (16, 16, 2));
        assert_eq!(c.dram_feature_bytes, 2 * (16 * 16 * 2) * 2);
        assert_eq!(c.macs_total, 16 * 16 * 9 * (2 + 4 + 4));
        assert_eq!(c.line_buffer_peak_bytes, 0);
    }

    #[test]
    fn single_conv_has_no_internal_traffic() {
        let spec = ModelSpec::new("single", 3, vec![LayerSpec::conv3x3(3, 4)]).unwrap();
        let net = Network::seeded(spec, 1);
        let img = FeatureMap::random(8, 8, 3, 2).unwrap();
        let (_, c) = infer_whole(&net, &img, 1).unwrap();
        assert_eq!(c.dram_feature_bytes, 0);
    }

    #[test]
    fn ffdnet_star_small_frame_traffic() {
        let spec = build_ffdnet_star(12, 8, 3).unwrap();
        let net = Network::seeded(spec, 3);
        let img = FeatureMap::random(16, 24, 3, 4).unwrap();
        let (out, c) = infer_whole(&net, &img, 2).unwrap();
        assert_eq!(out.shape(), (16, 24, 3));
        assert_eq!(c.dram_feature_bytes, 2 * 8 * 12 * 8 * 11 * 2);
    }

    #[test]
    fn rejects_bad_input() {
        let net = Network::seeded(build_ffdnet_star(3, 4, 3).unwrap(), 3);
        assert!(infer_whole(&net, &FeatureMap::zeros(8, 8, 1).unwrap(), 1).is_err());
        assert!(infer_whole(&net, &FeatureMap::zeros(7, 8, 3).unwrap(), 1).is_err());
    }
}
