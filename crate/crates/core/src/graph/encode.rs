//! Scalar-to-vector feature encodings.
//!
//! Raw interaction scalars (Coulomb entries, distances) become fixed
//! vectors here; learnable encoders inside the layers project them to the
//! hidden width.

use crate::error::{Error, Result};
use crate::graph::types::Graph;
use crate::tensor::Tensor;

/// Width of the binary expansion: sign slot + 49 integer bits + 50
/// fractional bits.
pub const BINARY_EXPANSION_DIM: usize = 100;

const INT_BITS: u32 = 49;
const FRAC_BITS: u32 = 50;

/// Expand a scalar into a 100-dim vector: slot 0 is sign(x) in {-1,0,1},
/// slots 1..=99 hold the 49.50 fixed-point bits of |x|, most-significant
/// first. Injective on the fixed-point grid, so distinct interaction
/// strengths stay distinguishable.
pub fn binary_expansion(x: f64) -> Result<Tensor> {
    if !x.is_finite() {
        return Err(Error::Domain("binary expansion of non-finite value".into()));
    }
    let a = x.abs();
    if a >= (1u64 << INT_BITS) as f64 {
        return Err(Error::Domain(format!(
            "|{x}| exceeds the 2^{INT_BITS} fixed-point range"
        )));
    }
    let scaled = (a * (1u64 << FRAC_BITS) as f64).round();
    // rounding may carry past the top bit right at the range edge
    if scaled >= 2f64.powi((INT_BITS + FRAC_BITS) as i32) {
        return Err(Error::Domain(format!(
            "|{x}| rounds past the 2^{INT_BITS} fixed-point range"
        )));
    }
    let bits = scaled as u128;
    let mut out = Tensor::zeros(&[BINARY_EXPANSION_DIM]);
    out.data_mut()[0] = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    let total = (INT_BITS + FRAC_BITS) as usize; // 99 bit slots
    for slot in 1..=total {
        let pos = total - slot; // slot 1 ↔ bit 98 (2^48) ... slot 99 ↔ bit 0 (2^-50)
        out.data_mut()[slot] = ((bits >> pos) & 1) as f64;
    }
    Ok(out)
}

/// Gaussian radial basis encoding of a distance: centers evenly spaced on
/// `[0, r_max]`, width equal to the center spacing.
pub fn rbf_encode(d: f64, dim: usize, r_max: f64) -> Result<Tensor> {
    if d < 0.0 || !d.is_finite() {
        return Err(Error::Domain("rbf distance must be finite and >= 0".into()));
    }
    if r_max <= 0.0 || dim < 2 {
        return Err(Error::Domain("rbf needs r_max > 0 and dim >= 2".into()));
    }
    let spacing = r_max / (dim - 1) as f64;
    let mut out = Tensor::zeros(&[dim]);
    for k in 0..dim {
        let mu = k as f64 * spacing;
        let z = (d - mu) / spacing;
        out.data_mut()[k] = (-0.5 * z * z).exp();
    }
    Ok(out)
}

/// Binary-expansion features for every edge weight of a graph.
pub fn binary_edge_features(g: &Graph) -> Result<Tensor> {
    let mut data = Vec::with_capacity(g.num_edges() * BINARY_EXPANSION_DIM);
    for &w in &g.edge_weight {
        data.extend_from_slice(binary_expansion(w)?.data());
    }
    Tensor::new(vec![g.num_edges(), BINARY_EXPANSION_DIM], data)
}

/// RBF features for every edge weight (a distance) of a graph.
pub fn rbf_edge_features(g: &Graph, dim: usize, r_max: f64) -> Result<Tensor> {
    let mut data = Vec::with_capacity(g.num_edges() * dim);
    for &w in &g.edge_weight {
        data.extend_from_slice(rbf_encode(w, dim, r_max)?.data());
    }
    Tensor::new(vec![g.num_edges(), dim], data)
}

/// Node features for a molecule: binary expansion of the Coulomb diagonal.
pub fn coulomb_node_features(x: &Tensor) -> Result<Tensor> {
    if x.shape().len() != 2 || x.rows() != x.cols() {
        return Err(Error::Dimension(format!(
            "expected square Coulomb matrix, got {:?}",
            x.shape()
        )));
    }
    let n = x.rows();
    let mut data = Vec::with_capacity(n * BINARY_EXPANSION_DIM);
    for i in 0..n {
        data.extend_from_slice(binary_expansion(x.at(i, i))?.data());
    }
    Tensor::new(vec![n, BINARY_EXPANSION_DIM], data)
}
