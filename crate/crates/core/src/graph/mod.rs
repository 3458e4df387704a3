//! Graph construction: dense interaction matrices, thresholded and
//! radius-based views, disjoint edge partitions, and feature encodings.

mod build;
mod encode;
mod types;

pub use build::{
    coulomb_matrix, partition_by_radii, partition_by_threshold, radius_graph, threshold_graph,
};
pub use encode::{
    binary_edge_features, binary_expansion, coulomb_node_features, rbf_edge_features, rbf_encode,
    BINARY_EXPANSION_DIM,
};
pub use types::{Graph, GraphTuple, PointCloud};
