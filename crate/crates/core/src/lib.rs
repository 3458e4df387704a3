//! Multi-view graph-tuple neural networks.
//!
//! A single dense interaction graph is partitioned into disjoint views by
//! interaction strength (Coulomb entries or distances); heterogeneous
//! message-passing layers (GINE-Gt, EGNN-Gt) then mix intra-view and
//! inter-view convolutions with learnable residual weights. All layers
//! carry hand-written backward passes verified against a central
//! finite-difference oracle.
//!
//! The `theory` module numerically certifies the linear-filter side of
//! the story: word-indexed filter bases over two non-commuting shift
//! operators, the noncommutative binomial identity, strict expressivity
//! over tied-coefficient polynomial classes, and the exact oracle-risk
//! gap in the Σ-weighted Frobenius geometry.
//!
//! The `harness` module adds synthetic data, training loops, metrics,
//! and deterministic experiment reports.

pub mod error;
pub mod graph;
pub mod harness;
pub mod layers;
pub mod nn;
pub mod tensor;
pub mod theory;

pub use error::{Error, Result};
pub use tensor::Tensor;
