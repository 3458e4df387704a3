//! Equivariant graph convolutional layer (EGCL).
//!
//! For each edge `(i, j)` (meaning `j in N(i)`):
//!
//! ```text
//! m_ij  = phi_e(h_i, h_j, ||x_i - x_j||^2, e_ij)
//! x_i'  = x_i + C_i * sum_j (x_i - x_j) * phi_x(m_ij)
//! h_i'  = phi_h(h_i, sum_j m_ij)
//! ```
//!
//! `C_i` is `1/max(1, |N(i)|)` in the default normalization. The
//! coordinate update is E(n)-equivariant: rotations, reflections, and
//! translations of the input positions carry through to the output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::params::{ParamCursor, ParamPack};
use crate::nn::{Activation, Mlp, MlpCache};
use crate::tensor::Tensor;

/// Normalization constant for the coordinate update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordNorm {
    /// `C_i = 1 / max(1, |N(i)|)`.
    MeanNeighbors,
    /// Fixed `C_i = c` for every node.
    Constant(f64),
}

impl CoordNorm {
    fn coefficient(&self, degree: usize) -> f64 {
        match *self {
            CoordNorm::MeanNeighbors => 1.0 / degree.max(1) as f64,
            CoordNorm::Constant(c) => c,
        }
    }
}

/// One EGCL bundle: edge, coordinate, and node MLPs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EgclParams {
    /// `(2d + 1 + d_e) -> d`, SiLU inside and on the output.
    pub phi_e: Mlp,
    /// `d -> 1`, SiLU inside, linear output scalar edge weight.
    pub phi_x: Mlp,
    /// `(2d) -> d`, SiLU inside, linear output.
    pub phi_h: Mlp,
    pub coord_norm: CoordNorm,
}

impl EgclParams {
    /// Fresh bundle at feature width `dim` for raw edge features of
    /// width `edge_dim`; hidden layers use width `dim`.
    pub fn new(dim: usize, edge_dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            phi_e: Mlp::new(
                &[2 * dim + 1 + edge_dim, dim, dim],
                Activation::Silu,
                true,
                rng,
            ),
            phi_x: Mlp::new(&[dim, dim, 1], Activation::Silu, false, rng),
            phi_h: Mlp::new(&[2 * dim, dim, dim], Activation::Silu, false, rng),
            coord_norm: CoordNorm::MeanNeighbors,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.phi_x.in_dim()
    }

    pub fn edge_dim(&self) -> usize {
        self.phi_e.in_dim() - 2 * self.hidden_dim() - 1
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            phi_e: self.phi_e.zeros_like(),
            phi_x: self.phi_x.zeros_like(),
            phi_h: self.phi_h.zeros_like(),
            coord_norm: self.coord_norm,
        }
    }
}

impl ParamPack for EgclParams {
    fn num_params(&self) -> usize {
        self.phi_e.num_params() + self.phi_x.num_params() + self.phi_h.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        self.phi_e.pack_into(out);
        self.phi_x.pack_into(out);
        self.phi_h.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.phi_e.unpack_from(src)?;
        self.phi_x.unpack_from(src)?;
        self.phi_h.unpack_from(src)
    }
}

/// Forward cache for the backward pass.
#[derive(Debug, Clone)]
pub struct EgclCache {
    diff: Tensor,      // x_i - x_j per edge, [m x 3]
    weights: Tensor,   // phi_x output per edge, [m x 1]
    coeff: Vec<f64>,   // C_i per node
    phi_e: MlpCache,
    phi_x: MlpCache,
    phi_h: MlpCache,
}

fn shape_check(h: &Tensor, x: &Tensor, g: &Graph, params: &EgclParams) -> Result<usize> {
    if h.shape().len() != 2 || h.rows() != g.n {
        return Err(Error::Dimension(format!(
            "node features {:?} for {} nodes",
            h.shape(),
            g.n
        )));
    }
    if x.shape() != [g.n, 3] {
        return Err(Error::Dimension(format!(
            "positions {:?}, expected [{}, 3]",
            x.shape(),
            g.n
        )));
    }
    let d = h.cols();
    if params.hidden_dim() != d {
        return Err(Error::Dimension(format!(
            "bundle width {} vs features width {}",
            params.hidden_dim(),
            d
        )));
    }
    if g.feature_dim() != params.edge_dim() {
        return Err(Error::Dimension(format!(
            "edge features width {} vs bundle edge width {}",
            g.feature_dim(),
            params.edge_dim()
        )));
    }
    Ok(d)
}

pub fn egcl(h: &Tensor, x: &Tensor, g: &Graph, params: &EgclParams) -> Result<(Tensor, Tensor)> {
    Ok(egcl_cached(h, x, g, params)?.0)
}

pub fn egcl_cached(
    h: &Tensor,
    x: &Tensor,
    g: &Graph,
    params: &EgclParams,
) -> Result<((Tensor, Tensor), EgclCache)> {
    let d = shape_check(h, x, g, params)?;
    let m = g.num_edges();
    let de = g.feature_dim();

    let mut diff = Tensor::zeros(&[m, 3]);
    let mut phi_e_in = Tensor::zeros(&[m, 2 * d + 1 + de]);
    for (t, &(i, j)) in g.edges.iter().enumerate() {
        let dr = diff.row_mut(t);
        let mut r2 = 0.0;
        for c in 0..3 {
            dr[c] = x.at(i, c) - x.at(j, c);
            r2 += dr[c] * dr[c];
        }
        let row = phi_e_in.row_mut(t);
        row[..d].copy_from_slice(h.row(i));
        row[d..2 * d].copy_from_slice(h.row(j));
        row[2 * d] = r2;
        row[2 * d + 1..].copy_from_slice(g.edge_feat.row(t));
    }

    let (msgs, phi_e_cache) = params.phi_e.forward_cached(&phi_e_in)?;
    let (weights, phi_x_cache) = params.phi_x.forward_cached(&msgs)?;

    let degrees = g.out_degrees();
    let coeff: Vec<f64> = degrees
        .iter()
        .map(|&deg| params.coord_norm.coefficient(deg))
        .collect();

    let mut x_out = x.clone();
    let mut msum = Tensor::zeros(&[g.n, d]);
    for (t, &(i, _)) in g.edges.iter().enumerate() {
        let w = weights.at(t, 0) * coeff[i];
        let dr = diff.row(t);
        let xr = x_out.row_mut(i);
        for c in 0..3 {
            xr[c] += w * dr[c];
        }
        let mr = msum.row_mut(i);
        let msg = msgs.row(t);
        for c in 0..d {
            mr[c] += msg[c];
        }
    }

    let mut phi_h_in = Tensor::zeros(&[g.n, 2 * d]);
    for i in 0..g.n {
        let row = phi_h_in.row_mut(i);
        row[..d].copy_from_slice(h.row(i));
        row[d..].copy_from_slice(msum.row(i));
    }
    let (h_out, phi_h_cache) = params.phi_h.forward_cached(&phi_h_in)?;

    Ok((
        (h_out, x_out),
        EgclCache {
            diff,
            weights,
            coeff,
            phi_e: phi_e_cache,
            phi_x: phi_x_cache,
            phi_h: phi_h_cache,
        },
    ))
}

/// Accumulates parameter grads into `grads` and returns `(dL/dH, dL/dX)`.
pub fn egcl_backward(
    g: &Graph,
    params: &EgclParams,
    cache: &EgclCache,
    d_h_out: &Tensor,
    d_x_out: &Tensor,
    grads: &mut EgclParams,
) -> Result<(Tensor, Tensor)> {
    let d = params.hidden_dim();
    let m = g.num_edges();

    // phi_h: split the input gradient into the h part and the message sum.
    let d_phi_h_in = params.phi_h.backward(&cache.phi_h, d_h_out, &mut grads.phi_h)?;
    let mut dh = Tensor::zeros(&[g.n, d]);
    for i in 0..g.n {
        dh.row_mut(i).copy_from_slice(&d_phi_h_in.row(i)[..d]);
    }

    // Coordinate update: x_i' = x_i + C_i * sum_t w_t * diff_t.
    let mut dx = d_x_out.clone();
    let mut d_weights = Tensor::zeros(&[m, 1]);
    let mut d_diff = Tensor::zeros(&[m, 3]);
    for (t, &(i, _)) in g.edges.iter().enumerate() {
        let ci = cache.coeff[i];
        let up = d_x_out.row(i);
        let dr = cache.diff.row(t);
        let w = cache.weights.at(t, 0);
        let mut dw = 0.0;
        let dd = d_diff.row_mut(t);
        for c in 0..3 {
            dw += ci * up[c] * dr[c];
            dd[c] = ci * w * up[c];
        }
        *d_weights.at_mut(t, 0) = dw;
    }

    // Message gradient: from phi_x and from the per-node message sums.
    let mut d_msgs = params.phi_x.backward(&cache.phi_x, &d_weights, &mut grads.phi_x)?;
    for (t, &(i, _)) in g.edges.iter().enumerate() {
        let dm = d_msgs.row_mut(t);
        let up = &d_phi_h_in.row(i)[d..2 * d];
        for c in 0..d {
            dm[c] += up[c];
        }
    }

    let d_phi_e_in = params.phi_e.backward(&cache.phi_e, &d_msgs, &mut grads.phi_e)?;
    for (t, &(i, j)) in g.edges.iter().enumerate() {
        let row = d_phi_e_in.row(t);
        {
            let dhi = dh.row_mut(i);
            for c in 0..d {
                dhi[c] += row[c];
            }
        }
        {
            let dhj = dh.row_mut(j);
            for c in 0..d {
                dhj[c] += row[d + c];
            }
        }
        let dr2 = row[2 * d];
        let dr = cache.diff.row(t);
        let dd = d_diff.row_mut(t);
        for c in 0..3 {
            dd[c] += 2.0 * dr[c] * dr2;
        }
    }

    for (t, &(i, j)) in g.edges.iter().enumerate() {
        let dd = d_diff.row(t);
        {
            let xi = dx.row_mut(i);
            for c in 0..3 {
                xi[c] += dd[c];
            }
        }
        let xj = dx.row_mut(j);
        for c in 0..3 {
            xj[c] -= dd[c];
        }
    }

    Ok((dh, dx))
}
