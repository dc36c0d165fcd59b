//! Spatial vision aggregator: a grid of learnable queries where each query
//! cross-attends only to its aligned sub-region of every encoder's feature
//! map, stacked `depth` times in `groups` parallel query groups, with optional
//! re-insertion inside a host model.

mod adapt;
mod check;
mod config;
mod error;
mod forward;
mod host;
mod mass;
mod params;

pub use adapt::{adapt_encoder_output, adapt_multi_stage, EncoderFeatureMap};
pub use check::{random_features, sva_bench, sva_grad_check, CheckRecord, GRAD_TOLERANCE, NORMALIZATION_TOLERANCE};
pub use config::SvaConfig;
pub use error::{Result, SvaError};
pub use forward::{
    global_feature, sub_region_rows, sub_region_view, sva_cross_attend,
    sva_forward, sva_forward_on_tape, QueryGrid, SvaOutput,
};
pub use host::{
    host_insert_forward, AffineBlock, HostInsertParams, HostOutput, HostStub, VisualSpan,
    PRESET_HOST_STRIDES,
};
pub use mass::{attention_mass_by_encoder, format_attention_report, AttentionLog, AttentionRecord};
pub use params::{BoundLayer, BoundParams, LayerParams, SvaParams};
