//! Message-passing layers with hand-written backward passes: GINE and
//! EGCL convolutions, their graph-tuple combinations, and pooling.

mod check;
mod egcl;
mod gine;
mod gt;
mod pool;

pub use check::{equivariance_check, layer_gradient_check, EquivarianceReport, LayerKind};
pub use egcl::{egcl, egcl_backward, egcl_cached, CoordNorm, EgclCache, EgclParams};
pub use gine::{gine_conv, gine_conv_backward, gine_conv_cached, GineCache, GineParams};
pub use gt::{
    egnn_gt_backward, egnn_gt_layer, egnn_gt_layer_cached, gine_gt_backward, gine_gt_layer,
    gine_gt_layer_cached, EgnnGtCache, EgnnGtParams, GineGtCache, GineGtParams, GtCombiner,
};
pub use pool::{global_mean_pool, global_mean_pool_backward};
