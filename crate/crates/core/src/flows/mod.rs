//! Three inference schedules over the same network: whole image, block recompute, block reuse.
//! All three share one convolution kernel with a fixed accumulation order, so their outputs
//! agree bit for bit.

mod patch;
mod recompute;
mod reuse;
mod whole;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Network};
use crate::tensor::FeatureMap;

pub use recompute::{infer_block_recompute, infer_block_recompute_traced, TileTrace};
pub use reuse::infer_block_reuse;
pub use whole::infer_whole;

/// Output-domain tile size, raster traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub block_size: usize,
    pub bytes_per_feature: u64,
}

impl BlockSchedule {
    pub fn new(block_size: usize) -> Self {
        Self {
            block_size,
            bytes_per_feature: 1,
        }
    }

    pub fn with_bytes_per_feature(mut self, bytes: u64) -> Self {
        self.bytes_per_feature = bytes;
        self
    }

    pub fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let align = spec.output_block_alignment() as usize;
        if self.block_size % align != 0 {
            return Err(Error::Divisibility {
                what: "block size",
                value: self.block_size,
                factor: align,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCounters {
    pub macs_total: u64,
    pub dram_feature_bytes: u64,
    /// Row and column caches in front of 3x3 convolutions.
    pub line_buffer_peak_bytes: u64,
    pub block_buffer_peak_bytes: u64,
    /// Reuse-flow caches feeding pixel shuffles or residual adds rather than a 3x3 conv.
    pub skip_buffer_peak_bytes: u64,
}

/// Operand count assumed by the block-buffer model.
pub const BLOCK_BUFFER_OPERANDS: u64 = 3;

pub(crate) fn check_input(net: &Network, img: &FeatureMap) -> Result<()> {
    let spec = net.spec();
    if img.channels() != spec.input_channels {
        return Err(Error::ChannelMismatch {
            expected: spec.input_channels,
            actual: img.channels(),
        });
    }
    let align = spec.input_alignment() as usize;
    if img.height() % align != 0 {
        return Err(Error::Divisibility {
            what: "height",
            value: img.height(),
            factor: align,
        });
    }
    if img.width() % align != 0 {
        return Err(Error::Divisibility {
            what: "width",
            value: img.width(),
            factor: align,
        });
    }
    Ok(())
}
