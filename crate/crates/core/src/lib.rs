//! Expansion-reduction networks for block-based CNN inference: model construction, three
//! reference inference flows, an analytic hardware cost model and a design-space scanner.

pub mod cost;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod io;
pub mod model;
pub mod rng;
pub mod scan;
pub mod target;
pub mod tensor;

pub use error::{Error, Result};
pub use flows::{
    infer_block_recompute, infer_block_recompute_traced, infer_block_reuse, infer_whole,
    BlockSchedule, FlowCounters, TileTrace,
};
pub use geometry::{required_input_region, tensor_dims, InputRequirement, Padding, Region, TensorDims};
pub use model::{
    build_chain, build_chain_model, build_dnernet, build_edsr_baseline, build_ermodule,
    build_ffdnet_star, build_plain, build_sr4ernet, effective_expansion_ratio, parse_model_name,
    ChainCfg, LayerKind, LayerSpec, ModelSpec, Network, Scale, TapId, Variant,
};
pub use rng::SeededGenerator;
pub use target::{Flow, HardwareTarget};
pub use tensor::{FeatureMap, Kernel, WeightTensor};
