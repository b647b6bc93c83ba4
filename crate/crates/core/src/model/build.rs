//! Constructors for ERNet chains, the two exemplar networks and the conventional baselines.

use super::chain::{ChainCfg, Variant};
use super::spec::{LayerSpec, ModelSpec, TapId};
use crate::error::{Error, Result};

/// Appends layers while tracking the running channel count and allocating tap ids.
struct Stack {
    layers: Vec<LayerSpec>,
    channels: usize,
    next_tap: u32,
}

impl Stack {
    fn new(channels: usize) -> Self {
        Self {
            layers: Vec::new(),
            channels,
            next_tap: 0,
        }
    }

    fn push(&mut self, layer: LayerSpec) {
        self.channels = layer.out_channels;
        self.layers.push(layer);
    }

    fn conv(&mut self, kernel: usize, out: usize) {
        let layer = if kernel == 3 {
            LayerSpec::conv3x3(self.channels, out)
        } else {
            LayerSpec::conv1x1(self.channels, out)
        };
        self.push(layer);
    }

    fn conv3(&mut self, out: usize) {
        self.conv(3, out);
    }

    fn relu(&mut self) {
        self.push(LayerSpec::relu(self.channels));
    }

    fn tap(&mut self) -> TapId {
        let id = TapId(self.next_tap);
        self.next_tap += 1;
        self.push(LayerSpec::tap(id, self.channels));
        id
    }

    fn add(&mut self, id: TapId) {
        self.push(LayerSpec::add_from(id, self.channels));
    }

    fn shuffle(&mut self, r: usize) {
        self.push(LayerSpec::pixel_shuffle(r, self.channels));
    }

    fn unshuffle(&mut self, r: usize) {
        self.push(LayerSpec::pixel_unshuffle(r, self.channels));
    }

    fn ermodule(&mut self, variant: Variant, ratio: usize, relu_before_residual: bool) {
        let width = self.channels;
        let tap = self.tap();
        self.conv(variant.expand_kernel(), width * ratio);
        self.relu();
        self.conv(variant.reduce_kernel(), width);
        if relu_before_residual {
            self.relu();
        }
        self.add(tap);
    }

    fn chain(&mut self, cfg: &ChainCfg) -> Result<()> {
        cfg.validate()?;
        if self.channels != cfg.width {
            return Err(Error::InvalidModel(format!(
                "chain width {} does not match incoming {} channels",
                cfg.width, self.channels
            )));
        }
        for ratio in cfg.module_ratios() {
            self.ermodule(cfg.variant, ratio, cfg.relu_before_residual);
        }
        Ok(())
    }

    /// Two x2 stages, each a C -> 4C conv followed by a pixel shuffle, then a conv to RGB.
    fn x4_tail(&mut self, width: usize, image_channels: usize) {
        for _ in 0..2 {
            self.conv3(4 * width);
            self.shuffle(2);
        }
        self.conv3(image_channels);
    }

    fn finish(self, name: String, input_channels: usize) -> Result<ModelSpec> {
        ModelSpec::new(name, input_channels, self.layers)
    }
}

/// One expansion-reduction module: tap, expand, ReLU, reduce, optional ReLU, residual add.
pub fn build_ermodule(
    variant: Variant,
    width: usize,
    ratio: usize,
    relu_before_residual: bool,
    tap: TapId,
) -> Result<Vec<LayerSpec>> {
    if ratio == 0 || width == 0 {
        return Err(Error::InvalidArgument(
            "module width and expansion ratio must be positive".into(),
        ));
    }
    let mut stack = Stack::new(width);
    stack.next_tap = tap.0;
    stack.ermodule(variant, ratio, relu_before_residual);
    Ok(stack.layers)
}

/// `B` modules, the first `N` at ratio `R_I + 1`. Tap ids start at 0.
pub fn build_chain(cfg: &ChainCfg) -> Result<Vec<LayerSpec>> {
    let mut stack = Stack::new(cfg.width);
    stack.chain(cfg)?;
    Ok(stack.layers)
}

/// The chain alone as a model with `width` input and output channels.
pub fn build_chain_model(cfg: &ChainCfg) -> Result<ModelSpec> {
    let mut stack = Stack::new(cfg.width);
    stack.chain(cfg)?;
    stack.finish(format!("Chain-{}", suffix(cfg)), cfg.width)
}

fn suffix(cfg: &ChainCfg) -> String {
    let mut s = cfg.to_string();
    if cfg.width != super::chain::DEFAULT_WIDTH {
        s.push_str(&format!("-C{}", cfg.width));
    }
    if cfg.relu_before_residual {
        s.push_str("-RR");
    }
    s
}

fn check_image_channels(image_channels: usize) -> Result<()> {
    if image_channels == 1 || image_channels == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "image channels must be 1 or 3, got {image_channels}"
        )))
    }
}

/// Denoiser: global skip at full resolution around unshuffle, head conv, chain, tail conv, shuffle.
pub fn build_dnernet(cfg: &ChainCfg, image_channels: usize) -> Result<ModelSpec> {
    check_image_channels(image_channels)?;
    let mut s = Stack::new(image_channels);
    let global = s.tap();
    s.unshuffle(2);
    let packed = s.channels;
    s.conv3(cfg.width);
    s.relu();
    s.chain(cfg)?;
    s.conv3(packed);
    s.shuffle(2);
    s.add(global);
    s.finish(format!("DnERNet-{packed}ch-{}", suffix(cfg)), image_channels)
}

/// x4 super-resolution: head conv, chain with a body skip, body conv, x4 upsampling tail.
pub fn build_sr4ernet(cfg: &ChainCfg) -> Result<ModelSpec> {
    let mut s = Stack::new(3);
    s.conv3(cfg.width);
    let body = s.tap();
    s.chain(cfg)?;
    s.conv3(cfg.width);
    s.add(body);
    s.x4_tail(cfg.width, 3);
    s.finish(format!("SR4ERNet-{}", suffix(cfg)), 3)
}

/// FFDNet without batch normalization and with a global skip (no noise-level map input).
pub fn build_ffdnet_star(depth: usize, width: usize, image_channels: usize) -> Result<ModelSpec> {
    check_image_channels(image_channels)?;
    if depth < 2 {
        return Err(Error::InvalidArgument(format!(
            "FFDNet* needs at least 2 layers, got {depth}"
        )));
    }
    if width == 0 {
        return Err(Error::InvalidArgument("width must be positive".into()));
    }
    let mut s = Stack::new(image_channels);
    let global = s.tap();
    s.unshuffle(2);
    let packed = s.channels;
    s.conv3(width);
    s.relu();
    for _ in 0..depth - 2 {
        s.conv3(width);
        s.relu();
    }
    s.conv3(packed);
    s.shuffle(2);
    s.add(global);
    s.finish(format!("FFDNet*-D{depth}C{width}"), image_channels)
}

pub fn build_edsr_baseline(n_resblocks: usize, width: usize) -> Result<ModelSpec> {
    if n_resblocks == 0 || width == 0 {
        return Err(Error::InvalidArgument(
            "EDSR-baseline needs at least one residual block and a positive width".into(),
        ));
    }
    let mut s = Stack::new(3);
    s.conv3(width);
    let body = s.tap();
    for _ in 0..n_resblocks {
        let local = s.tap();
        s.conv3(width);
        s.relu();
        s.conv3(width);
        s.add(local);
    }
    s.conv3(width);
    s.add(body);
    s.x4_tail(width, 3);
    s.finish(format!("EDSR-baseline-B{n_resblocks}C{width}"), 3)
}

/// `depth` 3x3 convolutions with ReLU between them.
pub fn build_plain(depth: usize, width: usize, image_channels: usize) -> Result<ModelSpec> {
    if depth == 0 || width == 0 || image_channels == 0 {
        return Err(Error::InvalidArgument(
            "plain network needs positive depth, width and input channels".into(),
        ));
    }
    let mut s = Stack::new(image_channels);
    for i in 0..depth {
        if i > 0 {
            s.relu();
        }
        s.conv3(width);
    }
    s.finish(format!("Plain-D{depth}C{width}"), image_channels)
}
