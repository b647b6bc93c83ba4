//! Model graphs: ERNet chains, exemplar networks, baselines and their static statistics.

mod build;
mod chain;
mod network;
mod spec;

pub use build::{
    build_chain, build_chain_model, build_dnernet, build_edsr_baseline, build_ermodule,
    build_ffdnet_star, build_plain, build_sr4ernet,
};
pub use chain::{effective_expansion_ratio, parse_model_name, ChainCfg, Variant, DEFAULT_WIDTH};
pub use network::{Network, BLOB_MAGIC, BLOB_VERSION};
pub use spec::{LayerKind, LayerSpec, ModelSpec, Scale, TapId};
