//! Dense feature maps and the handful of primitives every inference flow is built from.
//!
//! Convolution accumulates in a fixed order: start from the bias, then walk the taps with
//! `ky` ascending, `kx` ascending, `in_c` ascending. All flows share this kernel, which is
//! what makes whole-image and block-based outputs bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededGenerator;

/// A `height x width x channels` tensor stored row-major in `(y, x, c)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        Ok(Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        })
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut map = Self::zeros(height, width, channels)?;
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    map.data[(y * width + x) * channels + c] = f(y, x, c);
                }
            }
        }
        Ok(map)
    }

    /// Uniform noise in `[0, 1)`.
    pub fn random(height: usize, width: usize, channels: usize, seed: u64) -> Result<Self> {
        let mut g = SeededGenerator::new(seed);
        Self::from_fn(height, width, channels, |_, _, _| g.next_unit())
    }

    fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Shape(format!(
                "feature map dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// All channels of one pixel.
    pub fn pixel(&self, y: usize, x: usize) -> &[f64] {
        let base = (y * self.width + x) * self.channels;
        &self.data[base..base + self.channels]
    }

    pub fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [f64] {
        let base = (y * self.width + x) * self.channels;
        &mut self.data[base..base + self.channels]
    }

    /// Copies the rectangle `[y0, y0+h) x [x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Self> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::Shape(format!(
                "crop {h}x{w} at ({y0},{x0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut out = Self::zeros(h, w, self.channels)?;
        for y in 0..h {
            let src = ((y0 + y) * self.width + x0) * self.channels;
            let dst = y * w * self.channels;
            out.data[dst..dst + w * self.channels]
                .copy_from_slice(&self.data[src..src + w * self.channels]);
        }
        Ok(out)
    }

    /// Largest absolute elementwise difference. Shapes must match.
    pub fn max_abs_diff(&self, other: &FeatureMap) -> Result<f64> {
        same_shape(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// True when every value has the same bit pattern.
    pub fn bit_eq(&self, other: &FeatureMap) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Square convolution kernel, 1x1 or 3x3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "1x1")]
    K1,
    #[serde(rename = "3x3")]
    K3,
}

impl Kernel {
    pub fn size(self) -> usize {
        match self {
            Kernel::K1 => 1,
            Kernel::K3 => 3,
        }
    }

    pub fn taps(self) -> usize {
        self.size() * self.size()
    }

    /// Border width consumed on each side by a valid convolution.
    pub fn halo(self) -> usize {
        self.size() / 2
    }

    pub fn from_size(size: usize) -> Result<Self> {
        match size {
            1 => Ok(Kernel::K1),
            3 => Ok(Kernel::K3),
            other => Err(Error::InvalidArgument(format!(
                "unsupported kernel size {other}"
            ))),
        }
    }
}

/// Convolution weights ordered `(out_c, ky, kx, in_c)` plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    out_channels: usize,
    in_channels: usize,
    kernel: Kernel,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl WeightTensor {
    pub fn zeros(kernel: Kernel, in_channels: usize, out_channels: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            kernel,
            weights: vec![0.0; out_channels * kernel.taps() * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn new(
        kernel: Kernel,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::Shape("weight tensor needs positive channel counts".into()));
        }
        if weights.len() != out_channels * kernel.taps() * in_channels {
            return Err(Error::Shape(format!(
                "weights length {} does not match {out_channels}x{}x{}x{in_channels}",
                weights.len(),
                kernel.size(),
                kernel.size()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "bias length {} does not match {out_channels} output channels",
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel,
            weights,
            bias,
        })
    }

    /// Uniform in `[-s, s]` with `s = 1/sqrt(k*k*in_c)`, weights first, then biases.
    pub fn random(
        kernel: Kernel,
        in_channels: usize,
        out_channels: usize,
        g: &mut SeededGenerator,
    ) -> Self {
        let scale = 1.0 / ((kernel.taps() * in_channels) as f64).sqrt();
        let n = out_channels * kernel.taps() * in_channels;
        let weights = (0..n).map(|_| g.next_uniform() * scale).collect();
        let bias = (0..out_channels).map(|_| g.next_uniform() * scale).collect();
        Self {
            out_channels,
            in_channels,
            kernel,
            weights,
            bias,
        }
    }

    /// `out = in` over channels, zero bias.
    pub fn identity_1x1(channels: usize) -> Self {
        let mut w = Self::zeros(Kernel::K1, channels, channels);
        for c in 0..channels {
            w.weights[c * channels + c] = 1.0;
        }
        w
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, o: usize, ky: usize, kx: usize, i: usize) -> f64 {
        let k = self.kernel.size();
        self.weights[((o * k + ky) * k + kx) * self.in_channels + i]
    }

    /// Multiply-accumulates per output pixel.
    pub fn macs_per_pixel(&self) -> u64 {
        (self.kernel.taps() * self.in_channels * self.out_channels) as u64
    }
}

/// Valid convolution on a raw `(h, w, in_c)` buffer. Output is `(h-k+1, w-k+1, out_c)`.
/// Zero-sized inputs produce an empty output. Callers check shapes.
pub(crate) fn conv_valid_raw(input: &[f64], h: usize, w: usize, wt: &WeightTensor) -> Vec<f64> {
    let k = wt.kernel.size();
    let cin = wt.in_channels;
    let cout = wt.out_channels;
    if h < k || w < k {
        return Vec::new();
    }
    let oh = h - k + 1;
    let ow = w - k + 1;
    let mut out = vec![0.0; oh * ow * cout];
    let tap_len = k * k * cin;
    for y in 0..oh {
        for x in 0..ow {
            let dst = &mut out[(y * ow + x) * cout..(y * ow + x + 1) * cout];
            let mut o = 0;
            // Four independent accumulator chains; each keeps its own fixed order.
            while o + 4 <= cout {
                let mut acc = [wt.bias[o], wt.bias[o + 1], wt.bias[o + 2], wt.bias[o + 3]];
                let w0 = &wt.weights[o * tap_len..(o + 1) * tap_len];
                let w1 = &wt.weights[(o + 1) * tap_len..(o + 2) * tap_len];
                let w2 = &wt.weights[(o + 2) * tap_len..(o + 3) * tap_len];
                let w3 = &wt.weights[(o + 3) * tap_len..(o + 4) * tap_len];
                for ky in 0..k {
                    for kx in 0..k {
                        let src = ((y + ky) * w + x + kx) * cin;
                        let px = &input[src..src + cin];
                        let t = (ky * k + kx) * cin;
                        let (a, b, c, d) = (
                            &w0[t..t + cin],
                            &w1[t..t + cin],
                            &w2[t..t + cin],
                            &w3[t..t + cin],
                        );
                        for i in 0..cin {
                            let v = px[i];
                            acc[0] += a[i] * v;
                            acc[1] += b[i] * v;
                            acc[2] += c[i] * v;
                            acc[3] += d[i] * v;
                        }
                    }
                }
                dst[o..o + 4].copy_from_slice(&acc);
                o += 4;
            }
            while o < cout {
                let mut acc = wt.bias[o];
                let wo = &wt.weights[o * tap_len..(o + 1) * tap_len];
                for ky in 0..k {
                    for kx in 0..k {
                        let src = ((y + ky) * w + x + kx) * cin;
                        let px = &input[src..src + cin];
                        let t = (ky * k + kx) * cin;
                        for i in 0..cin {
                            acc += wo[t + i] * px[i];
                        }
                    }
                }
                dst[o] = acc;
                o += 1;
            }
        }
    }
    out
}

/// Valid (unpadded) convolution.
pub fn conv2d_valid(input: &FeatureMap, w: &WeightTensor) -> Result<FeatureMap> {
    if input.channels != w.in_channels {
        return Err(Error::ChannelMismatch {
            expected: w.in_channels,
            actual: input.channels,
        });
    }
    let k = w.kernel.size();
    if input.height < k || input.width < k {
        return Err(Error::Shape(format!(
            "input {}x{} smaller than {k}x{k} kernel",
            input.height, input.width
        )));
    }
    let data = conv_valid_raw(&input.data, input.height, input.width, w);
    FeatureMap::from_vec(input.height - k + 1, input.width - k + 1, w.out_channels, data)
}

pub fn pad_zero(
    input: &FeatureMap,
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
) -> FeatureMap {
    let h = input.height + top + bottom;
    let w = input.width + left + right;
    let c = input.channels;
    let mut data = vec![0.0; h * w * c];
    for y in 0..input.height {
        let src = y * input.width * c;
        let dst = ((y + top) * w + left) * c;
        data[dst..dst + input.width * c].copy_from_slice(&input.data[src..src + input.width * c]);
    }
    FeatureMap {
        height: h,
        width: w,
        channels: c,
        data,
    }
}

pub fn relu(input: &FeatureMap) -> FeatureMap {
    let mut out = input.clone();
    relu_in_place(&mut out.data);
    out
}

pub(crate) fn relu_in_place(data: &mut [f64]) {
    for v in data {
        *v = v.max(0.0);
    }
}

pub fn add(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    same_shape(a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
    Ok(FeatureMap {
        height: a.height,
        width: a.width,
        channels: a.channels,
        data,
    })
}

fn same_shape(a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Space-to-channel: `(H, W, C) -> (H/r, W/r, C*r*r)` with channel `c*r*r + dy*r + dx`.
pub fn pixel_unshuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 {
        return Err(Error::InvalidArgument("shuffle factor must be positive".into()));
    }
    if input.height % r != 0 {
        return Err(Error::Divisibility {
            what: "height",
            value: input.height,
            factor: r,
        });
    }
    if input.width % r != 0 {
        return Err(Error::Divisibility {
            what: "width",
            value: input.width,
            factor: r,
        });
    }
    let (h, w, c) = (input.height / r, input.width / r, input.channels * r * r);
    let data = unshuffle_raw(&input.data, input.height, input.width, input.channels, r);
    FeatureMap::from_vec(h, w, c, data)
}

/// Channel-to-space, the exact inverse of [`pixel_unshuffle`].
pub fn pixel_shuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 {
        return Err(Error::InvalidArgument("shuffle factor must be positive".into()));
    }
    if input.channels % (r * r) != 0 {
        return Err(Error::Divisibility {
            what: "channels",
            value: input.channels,
            factor: r * r,
        });
    }
    let data = shuffle_raw(&input.data, input.height, input.width, input.channels, r);
    FeatureMap::from_vec(
        input.height * r,
        input.width * r,
        input.channels / (r * r),
        data,
    )
}

pub(crate) fn unshuffle_raw(data: &[f64], h: usize, w: usize, c: usize, r: usize) -> Vec<f64> {
    let (oh, ow, oc) = (h / r, w / r, c * r * r);
    let mut out = vec![0.0; oh * ow * oc];
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                for dy in 0..r {
                    for dx in 0..r {
                        out[(y * ow + x) * oc + ch * r * r + dy * r + dx] =
                            data[((y * r + dy) * w + x * r + dx) * c + ch];
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn shuffle_raw(data: &[f64], h: usize, w: usize, c: usize, r: usize) -> Vec<f64> {
    let (oh, ow, oc) = (h * r, w * r, c / (r * r));
    let mut out = vec![0.0; oh * ow * oc];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..oc {
                for dy in 0..r {
                    for dx in 0..r {
                        out[((y * r + dy) * ow + x * r + dx) * oc + ch] =
                            data[(y * w + x) * c + ch * r * r + dy * r + dx];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive per-output-element oracle, written without the blocked accumulators.
    fn naive_conv(input: &FeatureMap, w: &WeightTensor) -> FeatureMap {
        let k = w.kernel().size();
        let oh = input.height() - k + 1;
        let ow = input.width() - k + 1;
        let mut out = FeatureMap::zeros(oh, ow, w.out_channels()).unwrap();
        for y in 0..oh {
            for x in 0..ow {
                for o in 0..w.out_channels() {
                    let mut acc = w.bias()[o];
                    for ky in 0..k {
                        for kx in 0..k {
                            for i in 0..w.in_channels() {
                                acc += w.weight(o, ky, kx, i) * input.get(y + ky, x + kx, i);
                            }
                        }
                    }
                    out.set(y, x, o, acc);
                }
            }
        }
        out
    }

    #[test]
    fn identity_1x1_is_passthrough() {
        let x = FeatureMap::random(5, 7, 3, 1).unwrap();
        let y = conv2d_valid(&x, &WeightTensor::identity_1x1(3)).unwrap();
        assert!(y.bit_eq(&x));
    }

    #[test]
    fn all_ones_3x3_on_constant() {
        let v = 0.25;
        let x = FeatureMap::from_fn(6, 6, 1, |_, _, _| v).unwrap();
        let w = WeightTensor::new(Kernel::K3, 1, 1, vec![1.0; 9], vec![0.0]).unwrap();
        let y = conv2d_valid(&x, &w).unwrap();
        assert_eq!(y.shape(), (4, 4, 1));
        assert!(y.data().iter().all(|&o| o == 9.0 * v));
    }

    #[test]
    fn random_conv_matches_naive_oracle() {
        let x = FeatureMap::random(8, 8, 4, 11).unwrap();
        let mut g = SeededGenerator::new(12);
        let w = WeightTensor::random(Kernel::K3, 4, 6, &mut g);
        assert!(conv2d_valid(&x, &w).unwrap().bit_eq(&naive_conv(&x, &w)));
    }

    #[test]
    fn conv_errors() {
        let x = FeatureMap::random(2, 8, 4, 1).unwrap();
        let w = WeightTensor::zeros(Kernel::K3, 4, 2);
        assert!(matches!(conv2d_valid(&x, &w), Err(Error::Shape(_))));
        let w = WeightTensor::zeros(Kernel::K1, 3, 2);
        assert!(matches!(
            conv2d_valid(&x, &w),
            Err(Error::ChannelMismatch { expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn padding() {
        let x = FeatureMap::from_vec(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(pad_zero(&x, 0, 0, 0, 0).bit_eq(&x));
        let p = pad_zero(&x, 1, 1, 1, 1);
        assert_eq!(p.shape(), (4, 4, 1));
        assert_eq!(p.get(1, 1, 0), 1.0);
        assert_eq!(p.get(2, 2, 0), 4.0);
        assert_eq!(p.get(0, 0, 0), 0.0);
        assert!(p.crop(1, 1, 2, 2).unwrap().bit_eq(&x));
        let q = pad_zero(&x, 2, 0, 1, 3);
        assert!(q.crop(2, 1, 2, 2).unwrap().bit_eq(&x));
    }

    #[test]
    fn relu_cases() {
        let x = FeatureMap::from_vec(1, 3, 1, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let neg = FeatureMap::from_fn(3, 3, 2, |_, _, _| -0.5).unwrap();
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
        let pos = FeatureMap::random(3, 3, 2, 3).unwrap();
        assert!(relu(&pos).bit_eq(&pos));
    }

    #[test]
    fn add_cases() {
        let a = FeatureMap::random(4, 3, 2, 5).unwrap();
        let b = FeatureMap::random(4, 3, 2, 6).unwrap();
        let z = FeatureMap::zeros(4, 3, 2).unwrap();
        assert!(add(&a, &z).unwrap().bit_eq(&a));
        let neg = FeatureMap::from_vec(4, 3, 2, a.data().iter().map(|v| -v).collect()).unwrap();
        assert!(add(&a, &neg).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(add(&a, &b).unwrap().bit_eq(&add(&b, &a).unwrap()));
        let c = FeatureMap::zeros(3, 4, 2).unwrap();
        assert!(add(&a, &c).is_err());
    }

    #[test]
    fn unshuffle_shape_and_index_formula() {
        let x = FeatureMap::from_fn(4, 4, 3, |y, x, c| (y * 100 + x * 10 + c) as f64).unwrap();
        let u = pixel_unshuffle(&x, 2).unwrap();
        assert_eq!(u.shape(), (2, 2, 12));
        for y in 0..2 {
            for xx in 0..2 {
                for c in 0..3 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let expect = ((2 * y + dy) * 100 + (2 * xx + dx) * 10 + c) as f64;
                            assert_eq!(u.get(y, xx, c * 4 + dy * 2 + dx), expect);
                        }
                    }
                }
            }
        }
        assert!(pixel_shuffle(&u, 2).unwrap().bit_eq(&x));
    }

    #[test]
    fn shuffle_divisibility_errors() {
        let x = FeatureMap::zeros(3, 4, 1).unwrap();
        assert!(matches!(
            pixel_unshuffle(&x, 2),
            Err(Error::Divisibility { what: "height", .. })
        ));
        let x = FeatureMap::zeros(2, 2, 6).unwrap();
        assert!(matches!(
            pixel_shuffle(&x, 2),
            Err(Error::Divisibility { what: "channels", .. })
        ));
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(FeatureMap::zeros(0, 3, 1).is_err());
        assert!(FeatureMap::from_vec(2, 2, 1, vec![0.0; 3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn conv_matches_oracle(h in 3usize..32, w in 3usize..32, cin in 1usize..8,
                                   cout in 1usize..9, k3 in any::<bool>(), seed in any::<u64>()) {
                let kernel = if k3 { Kernel::K3 } else { Kernel::K1 };
                let x = FeatureMap::random(h, w, cin, seed).unwrap();
                let mut g = SeededGenerator::new(seed ^ 0xABCD);
                let wt = WeightTensor::random(kernel, cin, cout, &mut g);
                prop_assert!(conv2d_valid(&x, &wt).unwrap().bit_eq(&naive_conv(&x, &wt)));
            }

            #[test]
            fn conv_translation_covariant(shift_y in 0usize..4, shift_x in 0usize..4, seed in any::<u64>()) {
                let big = FeatureMap::random(16, 16, 3, seed).unwrap();
                let mut g = SeededGenerator::new(seed.rotate_left(7));
                let wt = WeightTensor::random(Kernel::K3, 3, 2, &mut g);
                let full = conv2d_valid(&big, &wt).unwrap();
                let shifted = big.crop(shift_y, shift_x, 10, 10).unwrap();
                let part = conv2d_valid(&shifted, &wt).unwrap();
                prop_assert!(part.bit_eq(&full.crop(shift_y, shift_x, 8, 8).unwrap()));
            }

            #[test]
            fn shuffle_inverts_unshuffle(hh in 1usize..6, ww in 1usize..6, c in 1usize..4,
                                         r in 1usize..4, seed in any::<u64>()) {
                let x = FeatureMap::random(hh * r, ww * r, c, seed).unwrap();
                let u = pixel_unshuffle(&x, r).unwrap();
                prop_assert!(pixel_shuffle(&u, r).unwrap().bit_eq(&x));
            }

            #[test]
            fn deterministic(seed in any::<u64>()) {
                let x = FeatureMap::random(6, 6, 2, seed).unwrap();
                let mut g1 = SeededGenerator::new(seed);
                let mut g2 = SeededGenerator::new(seed);
                let a = conv2d_valid(&x, &WeightTensor::random(Kernel::K3, 2, 3, &mut g1)).unwrap();
                let b = conv2d_valid(&x, &WeightTensor::random(Kernel::K3, 2, 3, &mut g2)).unwrap();
                prop_assert!(a.bit_eq(&b));
            }
        }
    }
}
