//! Graph-tuple layers: per-view convolutions plus cross-view exchange
//! terms, mixed by learnable scalars around a residual connection.
//!
//! For a tuple with `k` views:
//!
//! ```text
//! H' = H + sum_i c_i * H_i + sum_{i != j} c_ij * H_{i->j}
//! ```
//!
//! where `H_i = Conv_i(H, view_i)` and `H_{i->j} = Conv_ij(H_i, view_j)`
//! (the intermediate result of view `i` pushed through view `j`'s
//! edges). The GINE variant keeps `k + k(k-1)` distinct bundles; the
//! EGNN variant shares a single EGCL bundle across all terms and mixes
//! the coordinate displacements with the same scalars.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTuple;
use crate::nn::params::{ParamCursor, ParamPack};
use crate::tensor::Tensor;

use super::egcl::{egcl_backward, egcl_cached, EgclCache, EgclParams};
use super::gine::{gine_conv_backward, gine_conv_cached, GineCache, GineParams};

/// Learnable mixing scalars: `c_intra[i]` for the per-view terms and
/// `c_inter` for ordered pairs `(i, j)`, `i != j`, laid out row-major
/// (`(0,1), (0,2), ..., (1,0), (1,2), ...`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtCombiner {
    pub c_intra: Vec<f64>,
    pub c_inter: Vec<f64>,
}

impl GtCombiner {
    /// Initial mixing: `c_i = 1/k`, `c_ij = 0`.
    pub fn new(k: usize) -> Self {
        Self {
            c_intra: vec![1.0 / k as f64; k],
            c_inter: vec![0.0; k * (k.saturating_sub(1))],
        }
    }

    pub fn k(&self) -> usize {
        self.c_intra.len()
    }

    /// Index of the ordered pair `(i, j)` in `c_inter`.
    pub fn inter_index(k: usize, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < k && j < k);
        i * (k - 1) + if j < i { j } else { j - 1 }
    }

    /// Ordered pairs `(i, j)`, `i != j`, in `c_inter` layout order.
    pub fn ordered_pairs(k: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(k * k.saturating_sub(1));
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            c_intra: vec![0.0; self.c_intra.len()],
            c_inter: vec![0.0; self.c_inter.len()],
        }
    }
}

impl ParamPack for GtCombiner {
    fn num_params(&self) -> usize {
        self.c_intra.len() + self.c_inter.len()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.c_intra);
        out.extend_from_slice(&self.c_inter);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        let ni = self.c_intra.len();
        self.c_intra.copy_from_slice(src.take(ni)?);
        let nj = self.c_inter.len();
        self.c_inter.copy_from_slice(src.take(nj)?);
        Ok(())
    }
}

fn check_tuple(k: usize, combiner: &GtCombiner) -> Result<()> {
    if combiner.c_intra.len() != k || combiner.c_inter.len() != k * (k - 1) {
        return Err(Error::Dimension(format!(
            "combiner sized for {} views, tuple has {}",
            combiner.c_intra.len(),
            k
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// GINE graph-tuple layer
// ---------------------------------------------------------------------------

/// Graph-tuple GINE layer: `k` intra bundles, `k(k-1)` inter bundles
/// (one per ordered view pair), and the mixing scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GineGtParams {
    pub intra: Vec<GineParams>,
    pub inter: Vec<GineParams>,
    pub combiner: GtCombiner,
}

impl GineGtParams {
    pub fn new(k: usize, hidden: usize, edge_dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            intra: (0..k).map(|_| GineParams::new(hidden, edge_dim, rng)).collect(),
            inter: (0..k * k.saturating_sub(1))
                .map(|_| GineParams::new(hidden, edge_dim, rng))
                .collect(),
            combiner: GtCombiner::new(k),
        }
    }

    pub fn k(&self) -> usize {
        self.intra.len()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            intra: self.intra.iter().map(GineParams::zeros_like).collect(),
            inter: self.inter.iter().map(GineParams::zeros_like).collect(),
            combiner: self.combiner.zeros_like(),
        }
    }
}

impl ParamPack for GineGtParams {
    fn num_params(&self) -> usize {
        self.intra.iter().map(ParamPack::num_params).sum::<usize>()
            + self.inter.iter().map(ParamPack::num_params).sum::<usize>()
            + self.combiner.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        for b in &self.intra {
            b.pack_into(out);
        }
        for b in &self.inter {
            b.pack_into(out);
        }
        self.combiner.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        for b in &mut self.intra {
            b.unpack_from(src)?;
        }
        for b in &mut self.inter {
            b.unpack_from(src)?;
        }
        self.combiner.unpack_from(src)
    }
}

/// Forward cache for the backward pass.
#[derive(Debug, Clone)]
pub struct GineGtCache {
    intra_out: Vec<Tensor>,
    intra_cache: Vec<GineCache>,
    inter_out: Vec<Tensor>,
    inter_cache: Vec<GineCache>,
}

pub fn gine_gt_layer(h: &Tensor, tuple: &GraphTuple, params: &GineGtParams) -> Result<Tensor> {
    Ok(gine_gt_layer_cached(h, tuple, params)?.0)
}

pub fn gine_gt_layer_cached(
    h: &Tensor,
    tuple: &GraphTuple,
    params: &GineGtParams,
) -> Result<(Tensor, GineGtCache)> {
    let k = tuple.k();
    check_tuple(k, &params.combiner)?;
    if params.intra.len() != k || params.inter.len() != k * (k - 1) {
        return Err(Error::Dimension(format!(
            "layer sized for {} views, tuple has {}",
            params.intra.len(),
            k
        )));
    }

    let mut intra_out = Vec::with_capacity(k);
    let mut intra_cache = Vec::with_capacity(k);
    for i in 0..k {
        let (out, cache) = gine_conv_cached(h, &tuple.views[i], &params.intra[i])?;
        intra_out.push(out);
        intra_cache.push(cache);
    }

    let pairs = GtCombiner::ordered_pairs(k);
    let mut inter_out = Vec::with_capacity(pairs.len());
    let mut inter_cache = Vec::with_capacity(pairs.len());
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let (out, cache) = gine_conv_cached(&intra_out[i], &tuple.views[j], &params.inter[idx])?;
        inter_out.push(out);
        inter_cache.push(cache);
    }

    // Residual plus mixed terms. Exact zeros are skipped so that an
    // all-zero combiner reproduces the input bit for bit.
    let mut out = h.clone();
    for i in 0..k {
        let c = params.combiner.c_intra[i];
        if c != 0.0 {
            out.axpy(c, &intra_out[i])?;
        }
    }
    for idx in 0..pairs.len() {
        let c = params.combiner.c_inter[idx];
        if c != 0.0 {
            out.axpy(c, &inter_out[idx])?;
        }
    }

    Ok((
        out,
        GineGtCache {
            intra_out,
            intra_cache,
            inter_out,
            inter_cache,
        },
    ))
}

/// Accumulates parameter grads into `grads` and returns dL/dH.
pub fn gine_gt_backward(
    tuple: &GraphTuple,
    params: &GineGtParams,
    cache: &GineGtCache,
    upstream: &Tensor,
    grads: &mut GineGtParams,
) -> Result<Tensor> {
    let k = tuple.k();
    let pairs = GtCombiner::ordered_pairs(k);

    // Scalar grads always flow, even through terms skipped in forward.
    for i in 0..k {
        grads.combiner.c_intra[i] += upstream.dot(&cache.intra_out[i])?;
    }
    for idx in 0..pairs.len() {
        grads.combiner.c_inter[idx] += upstream.dot(&cache.inter_out[idx])?;
    }

    // Upstream per intra output: the direct c_i term plus everything
    // flowing back from inter terms that consumed it.
    let mut d_intra: Vec<Tensor> = params
        .combiner
        .c_intra
        .iter()
        .map(|&c| upstream.scale(c))
        .collect();
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let c = params.combiner.c_inter[idx];
        if c == 0.0 {
            continue; // zero upstream contributes nothing anywhere
        }
        let up = upstream.scale(c);
        let back = gine_conv_backward(
            &tuple.views[j],
            &params.inter[idx],
            &cache.inter_cache[idx],
            &up,
            &mut grads.inter[idx],
        )?;
        d_intra[i].axpy(1.0, &back)?;
    }

    let mut dh = upstream.clone();
    for i in 0..k {
        let back = gine_conv_backward(
            &tuple.views[i],
            &params.intra[i],
            &cache.intra_cache[i],
            &d_intra[i],
            &mut grads.intra[i],
        )?;
        dh.axpy(1.0, &back)?;
    }
    Ok(dh)
}

// ---------------------------------------------------------------------------
// EGNN graph-tuple layer
// ---------------------------------------------------------------------------

/// Graph-tuple EGNN layer: one EGCL bundle shared by every term of the
/// combination, plus the mixing scalars. Feature and coordinate deltas
/// are mixed with the same scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EgnnGtParams {
    pub egcl: EgclParams,
    pub combiner: GtCombiner,
}

impl EgnnGtParams {
    pub fn new(k: usize, dim: usize, edge_dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            egcl: EgclParams::new(dim, edge_dim, rng),
            combiner: GtCombiner::new(k),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            egcl: self.egcl.zeros_like(),
            combiner: self.combiner.zeros_like(),
        }
    }
}

impl ParamPack for EgnnGtParams {
    fn num_params(&self) -> usize {
        self.egcl.num_params() + self.combiner.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        self.egcl.pack_into(out);
        self.combiner.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.egcl.unpack_from(src)?;
        self.combiner.unpack_from(src)
    }
}

/// Forward cache for the backward pass.
#[derive(Debug, Clone)]
pub struct EgnnGtCache {
    intra_h: Vec<Tensor>,
    intra_x: Vec<Tensor>, // absolute positions after view i's update
    intra_cache: Vec<EgclCache>,
    inter_h: Vec<Tensor>,
    inter_dx: Vec<Tensor>, // displacement relative to intra_x[i]
    inter_cache: Vec<EgclCache>,
}

pub fn egnn_gt_layer(
    h: &Tensor,
    x: &Tensor,
    tuple: &GraphTuple,
    params: &EgnnGtParams,
) -> Result<(Tensor, Tensor)> {
    Ok(egnn_gt_layer_cached(h, x, tuple, params)?.0)
}

pub fn egnn_gt_layer_cached(
    h: &Tensor,
    x: &Tensor,
    tuple: &GraphTuple,
    params: &EgnnGtParams,
) -> Result<((Tensor, Tensor), EgnnGtCache)> {
    let k = tuple.k();
    check_tuple(k, &params.combiner)?;

    let mut intra_h = Vec::with_capacity(k);
    let mut intra_x = Vec::with_capacity(k);
    let mut intra_cache = Vec::with_capacity(k);
    for i in 0..k {
        let ((hi, xi), cache) = egcl_cached(h, x, &tuple.views[i], &params.egcl)?;
        intra_h.push(hi);
        intra_x.push(xi);
        intra_cache.push(cache);
    }

    let pairs = GtCombiner::ordered_pairs(k);
    let mut inter_h = Vec::with_capacity(pairs.len());
    let mut inter_dx = Vec::with_capacity(pairs.len());
    let mut inter_cache = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let ((hij, xij), cache) = egcl_cached(&intra_h[i], &intra_x[i], &tuple.views[j], &params.egcl)?;
        inter_h.push(hij);
        inter_dx.push(xij.sub(&intra_x[i])?);
        inter_cache.push(cache);
    }

    let mut h_out = h.clone();
    let mut x_out = x.clone();
    for i in 0..k {
        let c = params.combiner.c_intra[i];
        if c != 0.0 {
            h_out.axpy(c, &intra_h[i])?;
            let dx = intra_x[i].sub(x)?;
            x_out.axpy(c, &dx)?;
        }
    }
    for idx in 0..pairs.len() {
        let c = params.combiner.c_inter[idx];
        if c != 0.0 {
            h_out.axpy(c, &inter_h[idx])?;
            x_out.axpy(c, &inter_dx[idx])?;
        }
    }

    Ok((
        (h_out, x_out),
        EgnnGtCache {
            intra_h,
            intra_x,
            intra_cache,
            inter_h,
            inter_dx,
            inter_cache,
        },
    ))
}

/// Accumulates parameter grads into `grads` and returns `(dL/dH, dL/dX)`.
pub fn egnn_gt_backward(
    x: &Tensor,
    tuple: &GraphTuple,
    params: &EgnnGtParams,
    cache: &EgnnGtCache,
    d_h_out: &Tensor,
    d_x_out: &Tensor,
    grads: &mut EgnnGtParams,
) -> Result<(Tensor, Tensor)> {
    let k = tuple.k();
    let pairs = GtCombiner::ordered_pairs(k);

    for i in 0..k {
        let dx = cache.intra_x[i].sub(x)?;
        grads.combiner.c_intra[i] += d_h_out.dot(&cache.intra_h[i])? + d_x_out.dot(&dx)?;
    }
    for idx in 0..pairs.len() {
        grads.combiner.c_inter[idx] +=
            d_h_out.dot(&cache.inter_h[idx])? + d_x_out.dot(&cache.inter_dx[idx])?;
    }

    // Per-view accumulators for gradients w.r.t. (intra_h[i], intra_x[i]).
    let n = x.rows();
    let d = d_h_out.cols();
    let mut acc_h: Vec<Tensor> = (0..k).map(|_| Tensor::zeros(&[n, d])).collect();
    let mut acc_x: Vec<Tensor> = (0..k).map(|_| Tensor::zeros(&[n, 3])).collect();

    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let c = params.combiner.c_inter[idx];
        if c == 0.0 {
            continue;
        }
        let up_h = d_h_out.scale(c);
        let up_x = d_x_out.scale(c);
        // inter_dx = xij - intra_x[i]: the subtraction sends -c * d_x_out
        // into intra_x[i] on top of whatever the EGCL call propagates.
        acc_x[i].axpy(-c, d_x_out)?;
        let (dh_in, dx_in) = egcl_backward(
            &tuple.views[j],
            &params.egcl,
            &cache.inter_cache[idx],
            &up_h,
            &up_x,
            &mut grads.egcl,
        )?;
        acc_h[i].axpy(1.0, &dh_in)?;
        acc_x[i].axpy(1.0, &dx_in)?;
    }

    let mut dh = d_h_out.clone();
    let mut dx = d_x_out.clone();
    for i in 0..k {
        let c = params.combiner.c_intra[i];
        let mut up_h = acc_h[i].clone();
        let mut up_x = acc_x[i].clone();
        if c != 0.0 {
            up_h.axpy(c, d_h_out)?;
            up_x.axpy(c, d_x_out)?;
            // the displacement intra_x[i] - x sends -c * d_x_out into x
            dx.axpy(-c, d_x_out)?;
        }
        let (dh_in, dx_in) = egcl_backward(
            &tuple.views[i],
            &params.egcl,
            &cache.intra_cache[i],
            &up_h,
            &up_x,
            &mut grads.egcl,
        )?;
        dh.axpy(1.0, &dh_in)?;
        dx.axpy(1.0, &dx_in)?;
    }
    Ok((dh, dx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::layers::gine::gine_conv;
    use crate::nn::finite_difference_check;
    use crate::nn::loss::mse_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tuple_2view(seed: u64, n: usize, de: usize) -> (GraphTuple, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |edges: Vec<(usize, usize)>, rng: &mut ChaCha8Rng| {
            let m = edges.len();
            let feats: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..de).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            Graph::new(n, edges, vec![1.0; m])
                .unwrap()
                .with_features(Tensor::from_rows(&feats).unwrap())
                .unwrap()
        };
        let v1 = mk(vec![(0, 1), (1, 0), (2, 3), (3, 2)], &mut rng);
        let v2 = mk(vec![(1, 2), (2, 1), (0, 3), (3, 0)], &mut rng);
        (GraphTuple::new(vec![v1, v2], vec![]).unwrap(), rng)
    }

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let len: usize = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn inter_index_layout() {
        assert_eq!(GtCombiner::ordered_pairs(3), vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        for (idx, (i, j)) in GtCombiner::ordered_pairs(3).into_iter().enumerate() {
            assert_eq!(GtCombiner::inter_index(3, i, j), idx);
        }
    }

    #[test]
    fn zero_combiner_is_bit_exact_identity() {
        let (tuple, mut rng) = tuple_2view(21, 4, 2);
        let d = 5;
        let mut params = GineGtParams::new(2, d, 2, &mut rng);
        params.combiner.c_intra = vec![0.0; 2];
        params.combiner.c_inter = vec![0.0; 2];
        let h = rand_tensor(&mut rng, &[4, d]);
        let out = gine_gt_layer(&h, &tuple, &params).unwrap();
        assert_eq!(out, h);

        let mut eparams = EgnnGtParams::new(2, d, 2, &mut rng);
        eparams.combiner.c_intra = vec![0.0; 2];
        eparams.combiner.c_inter = vec![0.0; 2];
        let x = rand_tensor(&mut rng, &[4, 3]);
        let (h_out, x_out) = egnn_gt_layer(&h, &x, &tuple, &eparams).unwrap();
        assert_eq!(h_out, h);
        assert_eq!(x_out, x);
    }

    #[test]
    fn single_view_unit_scalar_matches_residual_gine() {
        let (tuple, mut rng) = tuple_2view(22, 4, 2);
        let view = GraphTuple::new(vec![tuple.views[0].clone()], vec![]).unwrap();
        let d = 3;
        let mut params = GineGtParams::new(1, d, 2, &mut rng);
        params.combiner.c_intra = vec![1.0];
        let h = rand_tensor(&mut rng, &[4, d]);
        let out = gine_gt_layer(&h, &view, &params).unwrap();
        let plain = gine_conv(&h, &view.views[0], &params.intra[0]).unwrap();
        let expected = h.add(&plain).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn view_swap_changes_output() {
        // Inter terms read ordered pairs: (1->2) and (2->1) differ.
        let (tuple, mut rng) = tuple_2view(23, 4, 2);
        let d = 3;
        let mut params = GineGtParams::new(2, d, 2, &mut rng);
        params.combiner.c_intra = vec![0.3, 0.3];
        params.combiner.c_inter = vec![0.7, -0.2];
        let h = rand_tensor(&mut rng, &[4, d]);
        let out = gine_gt_layer(&h, &tuple, &params).unwrap();

        let swapped =
            GraphTuple::new(vec![tuple.views[1].clone(), tuple.views[0].clone()], vec![]).unwrap();
        let out_swapped = gine_gt_layer(&h, &swapped, &params).unwrap();
        assert!(out.max_abs_diff(&out_swapped) > 1e-6);
    }

    #[test]
    fn empty_view_is_harmless() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let n = 3;
        let full = Graph::new(n, vec![(0, 1), (1, 0)], vec![1.0, 1.0])
            .unwrap()
            .with_features(Tensor::zeros(&[2, 0]))
            .unwrap();
        let empty = Graph::new(n, vec![], vec![])
            .unwrap()
            .with_features(Tensor::zeros(&[0, 0]))
            .unwrap();
        let tuple = GraphTuple::new(vec![full, empty], vec![]).unwrap();
        let d = 3;
        let mut params = GineGtParams::new(2, d, 0, &mut rng);
        params.combiner.c_intra = vec![0.4, 0.4];
        params.combiner.c_inter = vec![0.1, 0.1];
        let h = rand_tensor(&mut rng, &[n, d]);
        let out = gine_gt_layer(&h, &tuple, &params).unwrap();
        assert!(out.is_finite());

        let mut eparams = EgnnGtParams::new(2, d, 0, &mut rng);
        eparams.combiner.c_intra = vec![0.4, 0.4];
        eparams.combiner.c_inter = vec![0.1, 0.1];
        let x = rand_tensor(&mut rng, &[n, 3]);
        let (h_out, x_out) = egnn_gt_layer(&h, &x, &tuple, &eparams).unwrap();
        assert!(h_out.is_finite() && x_out.is_finite());
    }

    #[test]
    fn gine_gt_gradients_match_finite_differences() {
        let (tuple, mut rng) = tuple_2view(31, 4, 2);
        let d = 3;
        let mut params = GineGtParams::new(2, d, 2, &mut rng);
        // exercise both live and skipped (zero) terms
        params.combiner.c_intra = vec![0.5, 0.0];
        params.combiner.c_inter = vec![0.3, 0.0];
        let h = rand_tensor(&mut rng, &[4, d]);
        let target = rand_tensor(&mut rng, &[4, d]);

        let (out, cache) = gine_gt_layer_cached(&h, &tuple, &params).unwrap();
        let (_, d_out) = mse_loss(&out, &target).unwrap();
        let mut grads = params.zeros_like();
        let dh = gine_gt_backward(&tuple, &params, &cache, &d_out, &mut grads).unwrap();

        let mut probe = params.clone();
        let err = finite_difference_check(
            &mut |p: &[f64]| {
                probe.unpack(p)?;
                let out = gine_gt_layer(&h, &tuple, &probe)?;
                Ok(mse_loss(&out, &target)?.0)
            },
            &params.pack(),
            &grads.pack(),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "param rel err {err}");

        let err_h = finite_difference_check(
            &mut |p: &[f64]| {
                let hp = Tensor::new(vec![4, d], p.to_vec())?;
                let out = gine_gt_layer(&hp, &tuple, &params)?;
                Ok(mse_loss(&out, &target)?.0)
            },
            h.data(),
            dh.data(),
            1e-6,
        )
        .unwrap();
        assert!(err_h < 1e-6, "h rel err {err_h}");
    }

    #[test]
    fn egnn_gt_gradients_match_finite_differences() {
        let (tuple, mut rng) = tuple_2view(37, 4, 2);
        let d = 3;
        let mut params = EgnnGtParams::new(2, d, 2, &mut rng);
        params.combiner.c_intra = vec![0.5, 0.25];
        params.combiner.c_inter = vec![0.3, 0.0];
        let h = rand_tensor(&mut rng, &[4, d]);
        let x = rand_tensor(&mut rng, &[4, 3]);
        let ht = rand_tensor(&mut rng, &[4, d]);
        let xt = rand_tensor(&mut rng, &[4, 3]);

        let loss = |p: &EgnnGtParams, h: &Tensor, x: &Tensor| -> Result<f64> {
            let (ho, xo) = egnn_gt_layer(h, x, &tuple, p)?;
            Ok(mse_loss(&ho, &ht)?.0 + mse_loss(&xo, &xt)?.0)
        };

        let ((h_out, x_out), cache) = egnn_gt_layer_cached(&h, &x, &tuple, &params).unwrap();
        let (_, d_h) = mse_loss(&h_out, &ht).unwrap();
        let (_, d_x) = mse_loss(&x_out, &xt).unwrap();
        let mut grads = params.zeros_like();
        let (dh, dx) =
            egnn_gt_backward(&x, &tuple, &params, &cache, &d_h, &d_x, &mut grads).unwrap();

        let mut probe = params.clone();
        let err = finite_difference_check(
            &mut |p: &[f64]| {
                probe.unpack(p)?;
                loss(&probe, &h, &x)
            },
            &params.pack(),
            &grads.pack(),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "param rel err {err}");

        let err_h = finite_difference_check(
            &mut |p: &[f64]| {
                let hp = Tensor::new(vec![4, d], p.to_vec())?;
                loss(&params, &hp, &x)
            },
            h.data(),
            dh.data(),
            1e-6,
        )
        .unwrap();
        assert!(err_h < 1e-6, "h rel err {err_h}");

        let err_x = finite_difference_check(
            &mut |p: &[f64]| {
                let xp = Tensor::new(vec![4, 3], p.to_vec())?;
                loss(&params, &h, &xp)
            },
            x.data(),
            dx.data(),
            1e-6,
        )
        .unwrap();
        assert!(err_x < 1e-6, "x rel err {err_x}");
    }

    #[test]
    fn egnn_gt_rotation_equivariant() {
        let (tuple, mut rng) = tuple_2view(41, 4, 2);
        let d = 3;
        let mut params = EgnnGtParams::new(2, d, 2, &mut rng);
        params.combiner.c_intra = vec![0.5, 0.5];
        params.combiner.c_inter = vec![0.2, -0.1];
        let h = rand_tensor(&mut rng, &[4, d]);
        let x = rand_tensor(&mut rng, &[4, 3]);
        let (h_out, x_out) = egnn_gt_layer(&h, &x, &tuple, &params).unwrap();

        let (s, c) = 1.1f64.sin_cos();
        let q = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
        let t = [-0.4, 0.9, 0.1];
        let mut xr = Tensor::zeros(&[4, 3]);
        for i in 0..4 {
            for a in 0..3 {
                let mut v = t[a];
                for b in 0..3 {
                    v += q[a][b] * x.at(i, b);
                }
                *xr.at_mut(i, a) = v;
            }
        }
        let (h_out_r, x_out_r) = egnn_gt_layer(&h, &xr, &tuple, &params).unwrap();
        assert!(h_out_r.max_abs_diff(&h_out) < 1e-9);
        for i in 0..4 {
            for a in 0..3 {
                let mut v = t[a];
                for b in 0..3 {
                    v += q[a][b] * x_out.at(i, b);
                }
                assert!((x_out_r.at(i, a) - v).abs() < 1e-9);
            }
        }
    }
}
