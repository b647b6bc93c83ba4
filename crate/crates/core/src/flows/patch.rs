use crate::geometry::Region;
use crate::model::{LayerKind, LayerSpec};
use crate::tensor::{conv_valid_raw, relu_in_place, shuffle_raw, unshuffle_raw, FeatureMap, WeightTensor};

/// A rectangular piece of one tensor, positioned in that tensor's pixel grid. May be empty.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Patch {
    pub region: Region,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Patch {
    pub fn zeros(region: Region, channels: usize) -> Self {
        Self {
            region,
            channels,
            data: vec![0.0; region.area() * channels],
        }
    }

    pub fn from_map(map: &FeatureMap, region: Region) -> Self {
        debug_assert!(Region::full(map.height(), map.width()).contains(&region));
        let c = map.channels();
        let mut data = Vec::with_capacity(region.area() * c);
        for y in region.y0..region.y1 {
            let start = (y as usize * map.width() + region.x0 as usize) * c;
            data.extend_from_slice(&map.data()[start..start + region.width() * c]);
        }
        Self {
            region,
            channels: c,
            data,
        }
    }

    pub fn pixel(&self, x: i64, y: i64) -> &[f64] {
        debug_assert!(self.region.contains_point(x, y), "({x},{y}) outside {:?}", self.region);
        let i = ((y - self.region.y0) as usize * self.region.width() + (x - self.region.x0) as usize)
            * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: i64, y: i64) -> &mut [f64] {
        let i = ((y - self.region.y0) as usize * self.region.width() + (x - self.region.x0) as usize)
            * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Copy of `r`; pixels outside `bounds` are zero, pixels inside must lie in `self`.
    pub fn gather(&self, r: Region, bounds: Region) -> Patch {
        let mut out = Patch::zeros(r, self.channels);
        let inner = r.intersect(&bounds);
        if inner.is_empty() {
            return out;
        }
        debug_assert!(self.region.contains(&inner), "{inner:?} not in {:?}", self.region);
        let c = self.channels;
        let len = inner.width() * c;
        for y in inner.y0..inner.y1 {
            let src = ((y - self.region.y0) as usize * self.region.width()
                + (inner.x0 - self.region.x0) as usize)
                * c;
            let dst = ((y - r.y0) as usize * r.width() + (inner.x0 - r.x0) as usize) * c;
            out.data[dst..dst + len].copy_from_slice(&self.data[src..src + len]);
        }
        out
    }

    pub fn write_into(&self, map: &mut FeatureMap) {
        for y in self.region.y0..self.region.y1 {
            for x in self.region.x0..self.region.x1 {
                map.pixel_mut(y as usize, x as usize)
                    .copy_from_slice(self.pixel(x, y));
            }
        }
    }
}

/// Runs one layer to produce `target`. `input` supplies any region of the layer's input tensor
/// (zeros outside the tensor), `tap` the tapped tensor of a residual add.
pub(crate) fn apply_layer(
    layer: &LayerSpec,
    weights: Option<&WeightTensor>,
    target: Region,
    input: &mut dyn FnMut(Region) -> Patch,
    tap: &mut dyn FnMut(Region) -> Patch,
) -> Patch {
    if target.is_empty() {
        return Patch::zeros(target, layer.out_channels);
    }
    match layer.kind {
        LayerKind::Conv3x3 | LayerKind::Conv1x1 => {
            let w = weights.expect("conv layer has weights");
            let win = input(target.dilate(w.kernel().halo() as i64));
            let data = conv_valid_raw(&win.data, win.region.height(), win.region.width(), w);
            Patch {
                region: target,
                channels: layer.out_channels,
                data,
            }
        }
        LayerKind::Relu => {
            let mut p = input(target);
            relu_in_place(&mut p.data);
            p
        }
        LayerKind::Tap { .. } => input(target),
        LayerKind::ResidualAddFrom { .. } => {
            let mut a = input(target);
            let b = tap(target);
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
            a
        }
        LayerKind::PixelShuffle { factor } => {
            let need = target.scale_down_cover(factor);
            let p = input(need);
            let up = Patch {
                region: need.scale_up(factor),
                channels: layer.out_channels,
                data: shuffle_raw(&p.data, need.height(), need.width(), p.channels, factor),
            };
            if up.region == target {
                up
            } else {
                up.gather(target, target)
            }
        }
        LayerKind::PixelUnshuffle { factor } => {
            let src = target.scale_up(factor);
            let p = input(src);
            Patch {
                region: target,
                channels: layer.out_channels,
                data: unshuffle_raw(&p.data, src.height(), src.width(), p.channels, factor),
            }
        }
    }
}
