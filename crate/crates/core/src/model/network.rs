//! A [`ModelSpec`] paired with concrete weights, and the binary weight blob format.
//!
//! Blob layout, all little-endian: magic `ERWB`, `u16` version, `u32` conv layer count, then per
//! conv layer a kernel-size byte, `u32` in_c, `u32` out_c, the `f64` weights in
//! `(out_c, ky, kx, in_c)` order and the `f64` biases.

use std::io::{Read, Write};

use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::rng::SeededGenerator;
use crate::tensor::{Kernel, WeightTensor};

pub const BLOB_MAGIC: &[u8; 4] = b"ERWB";
pub const BLOB_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: ModelSpec,
    /// One tensor per conv layer, in layer order.
    weights: Vec<WeightTensor>,
}

impl Network {
    pub fn new(spec: ModelSpec, weights: Vec<WeightTensor>) -> Result<Self> {
        spec.validate()?;
        let convs: Vec<_> = spec.layers.iter().filter(|l| l.kind.is_conv()).collect();
        if convs.len() != weights.len() {
            return Err(Error::InvalidModel(format!(
                "{} conv layers but {} weight tensors",
                convs.len(),
                weights.len()
            )));
        }
        for (i, (layer, w)) in convs.iter().zip(&weights).enumerate() {
            if Some(w.kernel()) != layer.kind.kernel()
                || w.in_channels() != layer.in_channels
                || w.out_channels() != layer.out_channels
            {
                return Err(Error::InvalidModel(format!(
                    "conv {i}: weights {}->{} {:?} do not match layer {}->{} {:?}",
                    w.in_channels(),
                    w.out_channels(),
                    w.kernel(),
                    layer.in_channels,
                    layer.out_channels,
                    layer.kind
                )));
            }
        }
        Ok(Self { spec, weights })
    }

    /// All weights and biases zero.
    pub fn zeros(spec: ModelSpec) -> Self {
        let weights = spec
            .layers
            .iter()
            .filter_map(|l| {
                l.kind
                    .kernel()
                    .map(|k| WeightTensor::zeros(k, l.in_channels, l.out_channels))
            })
            .collect();
        Self { spec, weights }
    }

    /// Deterministic initialization from one SplitMix64 stream drawn in layer order.
    pub fn seeded(spec: ModelSpec, seed: u64) -> Self {
        let mut g = SeededGenerator::new(seed);
        let weights = spec
            .layers
            .iter()
            .filter_map(|l| {
                l.kind
                    .kernel()
                    .map(|k| WeightTensor::random(k, l.in_channels, l.out_channels, &mut g))
            })
            .collect();
        Self { spec, weights }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[WeightTensor] {
        &self.weights
    }

    /// Weight tensor per layer index (`None` for parameter-free layers).
    pub(crate) fn layer_weights(&self) -> Vec<Option<&WeightTensor>> {
        let mut it = self.weights.iter();
        self.spec
            .layers
            .iter()
            .map(|l| if l.kind.is_conv() { it.next() } else { None })
            .collect()
    }

    pub fn write_blob<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(BLOB_MAGIC)?;
        out.write_all(&BLOB_VERSION.to_le_bytes())?;
        out.write_all(&(self.weights.len() as u32).to_le_bytes())?;
        for w in &self.weights {
            out.write_all(&[w.kernel().size() as u8])?;
            out.write_all(&(w.in_channels() as u32).to_le_bytes())?;
            out.write_all(&(w.out_channels() as u32).to_le_bytes())?;
            for v in w.weights().iter().chain(w.bias()) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn blob_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_blob(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Reads weights from a blob and checks them against `spec`.
    pub fn read_blob<R: Read>(spec: ModelSpec, mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != BLOB_MAGIC {
            return Err(Error::Format("not an ERWB weight blob".into()));
        }
        let version = u16::from_le_bytes(read_array(&mut input)?);
        if version != BLOB_VERSION {
            return Err(Error::Format(format!("unsupported blob version {version}")));
        }
        let count = u32::from_le_bytes(read_array(&mut input)?) as usize;
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let [k] = read_array::<1, _>(&mut input)?;
            let kernel = Kernel::from_size(k as usize).map_err(|e| Error::Format(e.to_string()))?;
            let cin = u32::from_le_bytes(read_array(&mut input)?) as usize;
            let cout = u32::from_le_bytes(read_array(&mut input)?) as usize;
            let n = cout * kernel.taps() * cin;
            let w = read_f64s(&mut input, n)?;
            let b = read_f64s(&mut input, cout)?;
            weights.push(WeightTensor::new(kernel, cin, cout, w, b)?);
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after blob", rest.len())));
        }
        Self::new(spec, weights)
    }
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    input.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
