use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Kernel;

/// Identifier pairing a [`LayerKind::Tap`] with its [`LayerKind::ResidualAddFrom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TapId(pub u32);

impl fmt::Display for TapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LayerKind {
    Conv3x3,
    Conv1x1,
    Relu,
    PixelShuffle { factor: usize },
    PixelUnshuffle { factor: usize },
    /// Marks a tensor for a later residual add. Identity on the data path.
    Tap { id: TapId },
    /// Adds the tensor stored at `id` to the incoming tensor.
    ResidualAddFrom { id: TapId },
}

impl LayerKind {
    pub fn kernel(&self) -> Option<Kernel> {
        match self {
            LayerKind::Conv3x3 => Some(Kernel::K3),
            LayerKind::Conv1x1 => Some(Kernel::K1),
            _ => None,
        }
    }

    pub fn is_conv(&self) -> bool {
        self.kernel().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl LayerSpec {
    pub fn conv3x3(in_channels: usize, out_channels: usize) -> Self {
        Self {
            kind: LayerKind::Conv3x3,
            in_channels,
            out_channels,
        }
    }

    pub fn conv1x1(in_channels: usize, out_channels: usize) -> Self {
        Self {
            kind: LayerKind::Conv1x1,
            in_channels,
            out_channels,
        }
    }

    pub fn relu(channels: usize) -> Self {
        Self::same(LayerKind::Relu, channels)
    }

    pub fn tap(id: TapId, channels: usize) -> Self {
        Self::same(LayerKind::Tap { id }, channels)
    }

    pub fn add_from(id: TapId, channels: usize) -> Self {
        Self::same(LayerKind::ResidualAddFrom { id }, channels)
    }

    pub fn pixel_shuffle(factor: usize, in_channels: usize) -> Self {
        Self {
            kind: LayerKind::PixelShuffle { factor },
            in_channels,
            out_channels: in_channels / (factor * factor),
        }
    }

    pub fn pixel_unshuffle(factor: usize, in_channels: usize) -> Self {
        Self {
            kind: LayerKind::PixelUnshuffle { factor },
            in_channels,
            out_channels: in_channels * factor * factor,
        }
    }

    fn same(kind: LayerKind, channels: usize) -> Self {
        Self {
            kind,
            in_channels: channels,
            out_channels: channels,
        }
    }

    /// Weights plus biases held by this layer.
    pub fn params(&self) -> u64 {
        match self.kind.kernel() {
            Some(k) => ((k.taps() * self.in_channels + 1) * self.out_channels) as u64,
            None => 0,
        }
    }

    /// Multiply-accumulates per pixel of this layer's own resolution.
    pub fn macs_per_pixel(&self) -> u64 {
        match self.kind.kernel() {
            Some(k) => (k.taps() * self.in_channels * self.out_channels) as u64,
            None => 0,
        }
    }
}

/// Spatial scale of a tensor relative to the model input, per axis.
pub type Scale = Ratio<u64>;

/// An ordered layer graph. Residual edges are expressed with tap/add pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub input_channels: usize,
    pub output_channels: usize,
    /// Output pixels per input pixel along each axis.
    pub scale: Scale,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Builds a spec from layers, deriving the output channels and scale, and validates it.
    pub fn new(name: impl Into<String>, input_channels: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let mut spec = Self {
            name: name.into(),
            input_channels,
            output_channels: input_channels,
            scale: Scale::from_integer(1),
            layers,
        };
        let scales = spec.tensor_scales()?;
        spec.output_channels = spec.layers.last().map_or(input_channels, |l| l.out_channels);
        spec.scale = *scales.last().unwrap();
        spec.validate()?;
        Ok(spec)
    }

    /// Checks channel chaining, shuffle divisibility and tap/add pairing.
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 {
            return Err(Error::InvalidModel("input channels must be positive".into()));
        }
        let scales = self.tensor_scales()?;
        let mut channels = self.input_channels;
        let mut taps: HashMap<TapId, (usize, Scale)> = HashMap::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_channels != channels {
                return Err(Error::InvalidModel(format!(
                    "layer {i} ({:?}) expects {} channels but receives {channels}",
                    layer.kind, layer.in_channels
                )));
            }
            let out = layer.out_channels;
            let ok = match layer.kind {
                LayerKind::Conv3x3 | LayerKind::Conv1x1 => out > 0,
                LayerKind::Relu => out == channels,
                LayerKind::PixelShuffle { factor } => {
                    factor > 0 && channels % (factor * factor) == 0 && out == channels / (factor * factor)
                }
                LayerKind::PixelUnshuffle { factor } => factor > 0 && out == channels * factor * factor,
                LayerKind::Tap { id } => {
                    if taps.insert(id, (channels, scales[i])).is_some() {
                        return Err(Error::InvalidModel(format!("tap {id} declared twice")));
                    }
                    out == channels
                }
                LayerKind::ResidualAddFrom { id } => {
                    match taps.get(&id) {
                        None => {
                            return Err(Error::InvalidModel(format!(
                                "layer {i} adds from tap {id} which is not declared before it"
                            )))
                        }
                        Some(&(c, s)) if c != channels || s != scales[i] => {
                            return Err(Error::InvalidModel(format!(
                                "layer {i} adds tap {id} of {c} channels at scale {s} to {channels} channels at scale {}",
                                scales[i]
                            )))
                        }
                        Some(_) => {}
                    }
                    out == channels
                }
            };
            if !ok {
                return Err(Error::InvalidModel(format!(
                    "layer {i} ({:?}) has inconsistent channels {} -> {}",
                    layer.kind, layer.in_channels, out
                )));
            }
            channels = out;
        }
        if channels != self.output_channels {
            return Err(Error::InvalidModel(format!(
                "declared {} output channels, layers produce {channels}",
                self.output_channels
            )));
        }
        if *scales.last().unwrap() != self.scale {
            return Err(Error::InvalidModel(format!(
                "declared scale {}, layers produce {}",
                self.scale,
                scales.last().unwrap()
            )));
        }
        Ok(())
    }

    /// Scale of every tensor: index 0 is the input, index `i + 1` the output of layer `i`.
    pub fn tensor_scales(&self) -> Result<Vec<Scale>> {
        let mut scales = Vec::with_capacity(self.layers.len() + 1);
        let mut s = Scale::from_integer(1);
        scales.push(s);
        for layer in &self.layers {
            match layer.kind {
                LayerKind::PixelShuffle { factor } | LayerKind::PixelUnshuffle { factor }
                    if factor == 0 =>
                {
                    return Err(Error::InvalidModel("shuffle factor must be positive".into()))
                }
                LayerKind::PixelShuffle { factor } => s *= factor as u64,
                LayerKind::PixelUnshuffle { factor } => s /= factor as u64,
                _ => {}
            }
            scales.push(s);
        }
        Ok(scales)
    }

    /// Channel count of every tensor, indexed like [`ModelSpec::tensor_scales`].
    pub fn tensor_channels(&self) -> Vec<usize> {
        std::iter::once(self.input_channels)
            .chain(self.layers.iter().map(|l| l.out_channels))
            .collect()
    }

    pub fn conv_count(&self, kernel: Kernel) -> usize {
        self.layers
            .iter()
            .filter(|l| l.kind.kernel() == Some(kernel))
            .count()
    }

    /// Number of 3x3 convolution layers (model depth).
    pub fn depth(&self) -> usize {
        self.conv_count(Kernel::K3)
    }

    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(LayerSpec::params).sum()
    }

    /// Multiply-accumulates per output-image pixel, with every layer weighted by its
    /// pixel rate relative to the output.
    pub fn macs_per_output_pixel(&self) -> Ratio<u64> {
        let scales = self.tensor_scales().expect("validated model");
        let out = self.scale;
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind.is_conv())
            .map(|(i, l)| {
                let rel = scales[i + 1] / out;
                rel * rel * l.macs_per_pixel()
            })
            .fold(Ratio::from_integer(0), |a, b| a + b)
    }

    /// Least common multiple of shuffle denominators: image dimensions must be multiples of this.
    pub fn input_alignment(&self) -> u64 {
        let scales = self.tensor_scales().expect("validated model");
        scales.iter().fold(1, |acc, s| lcm(acc, *s.denom()))
    }

    /// Output-domain block sizes must be multiples of this so every layer sees whole pixels.
    pub fn output_block_alignment(&self) -> u64 {
        let scales = self.tensor_scales().expect("validated model");
        scales
            .iter()
            .map(|s| *(self.scale / s).numer())
            .fold(1, lcm)
    }

    /// Indices of tap layers whose tensor is the model input itself.
    pub(crate) fn is_input_tap(&self, layer: usize) -> bool {
        matches!(self.layers[layer].kind, LayerKind::Tap { .. })
            && self.layers[..layer]
                .iter()
                .all(|l| matches!(l.kind, LayerKind::Tap { .. }))
    }

    /// Layer index of each tap.
    pub(crate) fn tap_layers(&self) -> HashMap<TapId, usize> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l.kind {
                LayerKind::Tap { id } => Some((id, i)),
                _ => None,
            })
            .collect()
    }

    /// JSON model description.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Vec<LayerSpec> {
        vec![
            LayerSpec::tap(TapId(0), 3),
            LayerSpec::pixel_unshuffle(2, 3),
            LayerSpec::conv3x3(12, 8),
            LayerSpec::relu(8),
            LayerSpec::conv3x3(8, 12),
            LayerSpec::pixel_shuffle(2, 12),
            LayerSpec::add_from(TapId(0), 3),
        ]
    }

    #[test]
    fn derives_scale_and_channels() {
        let m = ModelSpec::new("tiny", 3, tiny()).unwrap();
        assert_eq!(m.output_channels, 3);
        assert_eq!(m.scale, Scale::from_integer(1));
        assert_eq!(m.depth(), 2);
        assert_eq!(m.input_alignment(), 2);
        assert_eq!(m.output_block_alignment(), 2);
        assert_eq!(
            m.macs_per_output_pixel(),
            Ratio::new(9 * 12 * 8 + 9 * 8 * 12, 4)
        );
    }

    #[test]
    fn rejects_channel_break() {
        let mut layers = tiny();
        layers[4] = LayerSpec::conv3x3(7, 12);
        assert!(matches!(
            ModelSpec::new("bad", 3, layers),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn rejects_add_before_tap() {
        let layers = vec![
            LayerSpec::add_from(TapId(0), 3),
            LayerSpec::tap(TapId(0), 3),
        ];
        assert!(ModelSpec::new("bad", 3, layers).is_err());
    }

    #[test]
    fn rejects_scale_mismatched_residual() {
        let layers = vec![
            LayerSpec::tap(TapId(0), 4),
            LayerSpec::pixel_unshuffle(2, 4),
            LayerSpec::conv1x1(16, 4),
            LayerSpec::add_from(TapId(0), 4),
        ];
        assert!(ModelSpec::new("bad", 4, layers).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = ModelSpec::new("tiny", 3, tiny()).unwrap();
        let back = ModelSpec::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }
}
