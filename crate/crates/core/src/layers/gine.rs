//! GINE convolution: isomorphism-network update with edge features.
//!
//! `h_i' = MLP((1+eps) h_i + sum_{j in N(i)} ReLU(h_j + e_ij))` where
//! `e_ij` is the raw edge feature passed through this bundle's linear
//! edge encoder. An edge `(i, j)` delivers `h_j` to node `i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::params::{ParamCursor, ParamPack};
use crate::nn::{Activation, LinearLayer, Mlp, MlpCache};
use crate::tensor::Tensor;

/// One GINE bundle: learnable eps, a linear edge encoder to the hidden
/// width, and the update MLP (two linear layers with a ReLU between).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GineParams {
    pub epsilon: f64,
    pub edge_encoder: LinearLayer,
    pub mlp: Mlp,
}

impl GineParams {
    /// Fresh bundle at hidden width `hidden` for raw edge features of
    /// width `edge_dim`. Eps starts at 0.
    pub fn new(hidden: usize, edge_dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            epsilon: 0.0,
            edge_encoder: LinearLayer::new(edge_dim, hidden, rng),
            mlp: Mlp::new(&[hidden, hidden, hidden], Activation::Relu, false, rng),
        }
    }

    /// Identity configuration: eps 0, zero edge encoding, identity MLP.
    pub fn identity(hidden: usize, edge_dim: usize) -> Self {
        Self {
            epsilon: 0.0,
            edge_encoder: LinearLayer {
                weight: Tensor::zeros(&[hidden, edge_dim]),
                bias: Tensor::zeros(&[hidden]),
            },
            mlp: Mlp::identity(hidden, 1, Activation::Relu),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.edge_encoder.out_dim()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            epsilon: 0.0,
            edge_encoder: self.edge_encoder.zeros_like(),
            mlp: self.mlp.zeros_like(),
        }
    }
}

impl ParamPack for GineParams {
    fn num_params(&self) -> usize {
        1 + self.edge_encoder.num_params() + self.mlp.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        out.push(self.epsilon);
        self.edge_encoder.pack_into(out);
        self.mlp.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.epsilon = src.take_one()?;
        self.edge_encoder.unpack_from(src)?;
        self.mlp.unpack_from(src)
    }
}

/// Forward cache for the backward pass.
#[derive(Debug, Clone)]
pub struct GineCache {
    h: Tensor,
    pre: Tensor, // h_j + e_ij per edge, before the ReLU
    mlp: MlpCache,
}

fn shape_check(h: &Tensor, g: &Graph, params: &GineParams) -> Result<usize> {
    if h.shape().len() != 2 || h.rows() != g.n {
        return Err(Error::Dimension(format!(
            "node features {:?} for {} nodes",
            h.shape(),
            g.n
        )));
    }
    let d = h.cols();
    if params.edge_encoder.out_dim() != d || params.mlp.in_dim() != d {
        return Err(Error::Dimension(format!(
            "bundle hidden width {} vs features width {}",
            params.edge_encoder.out_dim(),
            d
        )));
    }
    if g.feature_dim() != params.edge_encoder.in_dim() {
        return Err(Error::Dimension(format!(
            "edge features width {} vs encoder input {}",
            g.feature_dim(),
            params.edge_encoder.in_dim()
        )));
    }
    Ok(d)
}

pub fn gine_conv(h: &Tensor, g: &Graph, params: &GineParams) -> Result<Tensor> {
    Ok(gine_conv_cached(h, g, params)?.0)
}

pub fn gine_conv_cached(h: &Tensor, g: &Graph, params: &GineParams) -> Result<(Tensor, GineCache)> {
    let d = shape_check(h, g, params)?;
    let encoded = params.edge_encoder.forward(&g.edge_feat)?;

    let mut pre = Tensor::zeros(&[g.num_edges(), d]);
    let mut base = h.scale(1.0 + params.epsilon);
    for (t, &(i, j)) in g.edges.iter().enumerate() {
        let hj = h.row(j);
        let enc = encoded.row(t);
        let pr = pre.row_mut(t);
        for c in 0..d {
            pr[c] = hj[c] + enc[c];
        }
        let br = base.row_mut(i);
        for c in 0..d {
            br[c] += pr[c].max(0.0);
        }
    }

    let (out, mlp_cache) = params.mlp.forward_cached(&base)?;
    Ok((
        out,
        GineCache {
            h: h.clone(),
            pre,
            mlp: mlp_cache,
        },
    ))
}

/// Accumulates parameter grads into `grads` and returns dL/dH.
pub fn gine_conv_backward(
    g: &Graph,
    params: &GineParams,
    cache: &GineCache,
    upstream: &Tensor,
    grads: &mut GineParams,
) -> Result<Tensor> {
    let d = cache.h.cols();
    let d_base = params.mlp.backward(&cache.mlp, upstream, &mut grads.mlp)?;

    grads.epsilon += d_base.dot(&cache.h)?;
    let mut dh = d_base.scale(1.0 + params.epsilon);

    let mut d_pre = Tensor::zeros(&[g.num_edges(), d]);
    for (t, &(i, j)) in g.edges.iter().enumerate() {
        let db = d_base.row(i);
        let pr = cache.pre.row(t);
        let dp = d_pre.row_mut(t);
        for c in 0..d {
            if pr[c] > 0.0 {
                dp[c] = db[c];
            }
        }
        let dhj = dh.row_mut(j);
        for c in 0..d {
            dhj[c] += dp[c];
        }
    }
    params
        .edge_encoder
        .backward(&g.edge_feat, &d_pre, &mut grads.edge_encoder)?;
    Ok(dh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_check;
    use crate::nn::loss::mse_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn no_feat(n: usize, edges: Vec<(usize, usize)>) -> Graph {
        let m = edges.len();
        let w = vec![1.0; m];
        Graph::new(n, edges, w)
            .unwrap()
            .with_features(Tensor::zeros(&[m, 0]))
            .unwrap()
    }

    #[test]
    fn no_edges_identity_config_is_identity() {
        let g = no_feat(3, vec![]);
        let params = GineParams::identity(2, 0);
        let h = Tensor::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0], vec![0.0, 0.0]]).unwrap();
        let out = gine_conv(&h, &g, &params).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn single_edge_hand_evaluated() {
        // node 0 receives ReLU(h_1) = 2, so h_0' = 1 + 2 = 3
        let g = no_feat(2, vec![(0, 1)]);
        let params = GineParams::identity(1, 0);
        let h = Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let out = gine_conv(&h, &g, &params).unwrap();
        assert_eq!(out.data(), &[3.0, 2.0]);
    }

    #[test]
    fn permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let d = 4;
        let params = GineParams::new(d, 2, &mut rng);
        let edges = vec![(0, 1), (1, 0), (2, 4), (4, 2), (1, 3), (3, 1)];
        let feats: Vec<Vec<f64>> = (0..edges.len())
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let g = Graph::new(n, edges.clone(), vec![1.0; edges.len()])
            .unwrap()
            .with_features(Tensor::from_rows(&feats).unwrap())
            .unwrap();
        let h = Tensor::new(
            vec![n, d],
            (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let out = gine_conv(&h, &g, &params).unwrap();

        // permutation (shift by 2)
        let perm: Vec<usize> = (0..n).map(|i| (i + 2) % n).collect();
        let p_edges: Vec<(usize, usize)> = edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        let pg = Graph::new(n, p_edges, vec![1.0; edges.len()])
            .unwrap()
            .with_features(Tensor::from_rows(&feats).unwrap())
            .unwrap();
        let mut ph = Tensor::zeros(&[n, d]);
        for i in 0..n {
            ph.row_mut(perm[i]).copy_from_slice(h.row(i));
        }
        let p_out = gine_conv(&ph, &pg, &params).unwrap();
        for i in 0..n {
            for c in 0..d {
                assert!((p_out.at(perm[i], c) - out.at(i, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 4;
        let d = 3;
        let params = GineParams::new(d, 2, &mut rng);
        let edges = vec![(0, 1), (1, 0), (1, 2), (2, 1), (0, 3), (3, 0)];
        let feats: Vec<Vec<f64>> = (0..edges.len())
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let g = Graph::new(n, edges, vec![1.0; 6])
            .unwrap()
            .with_features(Tensor::from_rows(&feats).unwrap())
            .unwrap();
        let h = Tensor::new(
            vec![n, d],
            (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let target = Tensor::new(
            vec![n, d],
            (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();

        let (out, cache) = gine_conv_cached(&h, &g, &params).unwrap();
        let (_, d_out) = mse_loss(&out, &target).unwrap();
        let mut grads = params.zeros_like();
        gine_conv_backward(&g, &params, &cache, &d_out, &mut grads).unwrap();

        let mut probe = params.clone();
        let err = finite_difference_check(
            &mut |p: &[f64]| {
                probe.unpack(p)?;
                let out = gine_conv(&h, &g, &probe)?;
                Ok(mse_loss(&out, &target)?.0)
            },
            &params.pack(),
            &grads.pack(),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "rel err {err}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 3;
        let d = 2;
        let params = GineParams::new(d, 0, &mut rng);
        let g = no_feat(n, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        let h = Tensor::new(
            vec![n, d],
            (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let target = Tensor::zeros(&[n, d]);

        let (out, cache) = gine_conv_cached(&h, &g, &params).unwrap();
        let (_, d_out) = mse_loss(&out, &target).unwrap();
        let mut grads = params.zeros_like();
        let dh = gine_conv_backward(&g, &params, &cache, &d_out, &mut grads).unwrap();

        let err = finite_difference_check(
            &mut |p: &[f64]| {
                let hp = Tensor::new(vec![n, d], p.to_vec())?;
                let out = gine_conv(&hp, &g, &params)?;
                Ok(mse_loss(&out, &target)?.0)
            },
            h.data(),
            dh.data(),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "rel err {err}");
    }
}
