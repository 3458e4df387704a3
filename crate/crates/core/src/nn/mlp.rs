//! Small dense MLPs with hand-written backward passes.
//!
//! Layers are affine maps `y = x W^T + b` with an activation between
//! layers; the output stays linear unless `final_activation` is set.
//! Backward is exact reverse-mode over a forward cache, checked against
//! the finite-difference oracle in the tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::{ParamCursor, ParamPack};
use crate::tensor::{gemm, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Silu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Silu => x / (1.0 + (-x).exp()),
        }
    }

    /// Derivative as a function of the pre-activation value.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 + x * (1.0 - s))
            }
        }
    }
}

/// One affine layer: `weight` is `[out × in]`, `bias` is `[out]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearLayer {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        // Uniform ±sqrt(6/(fan_in+fan_out)), zero bias.
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..out_dim * in_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self {
            weight: Tensor::new(vec![out_dim, in_dim], data).expect("sized above"),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weight: Tensor::eye(dim),
            bias: Tensor::zeros(&[dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// y = x W^T + b for a batch `x: [B × in]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 2 || x.cols() != self.in_dim() {
            return Err(Error::Dimension(format!(
                "linear layer expects [batch × {}], got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        let (batch, in_dim, out_dim) = (x.rows(), self.in_dim(), self.out_dim());
        let mut y = Tensor::zeros(&[batch, out_dim]);
        for b in 0..batch {
            y.row_mut(b).copy_from_slice(self.bias.data());
        }
        // y += x Wᵀ (transpose expressed through swapped strides)
        gemm(
            batch,
            in_dim,
            out_dim,
            1.0,
            x.data(),
            [in_dim as isize, 1],
            self.weight.data(),
            [1, in_dim as isize],
            1.0,
            y.data_mut(),
            out_dim as isize,
        );
        Ok(y)
    }

    /// Given dL/dy, accumulate dW, db into `grads` and return dL/dx.
    pub fn backward(&self, x: &Tensor, upstream: &Tensor, grads: &mut LinearLayer) -> Result<Tensor> {
        let (batch, in_dim, out_dim) = (x.rows(), self.in_dim(), self.out_dim());
        if upstream.rows() != batch || upstream.cols() != out_dim {
            return Err(Error::Dimension(format!(
                "upstream shape {:?} vs output [{} × {}]",
                upstream.shape(),
                batch,
                out_dim
            )));
        }
        let mut dx = Tensor::zeros(&[batch, in_dim]);
        // dW += gᵀ x
        gemm(
            out_dim,
            batch,
            in_dim,
            1.0,
            upstream.data(),
            [1, out_dim as isize],
            x.data(),
            [in_dim as isize, 1],
            1.0,
            grads.weight.data_mut(),
            in_dim as isize,
        );
        // db += column sums of g
        for b in 0..batch {
            let g = upstream.row(b);
            let db = grads.bias.data_mut();
            for o in 0..out_dim {
                db[o] += g[o];
            }
        }
        // dx = g W
        gemm(
            batch,
            out_dim,
            in_dim,
            1.0,
            upstream.data(),
            [out_dim as isize, 1],
            self.weight.data(),
            [in_dim as isize, 1],
            0.0,
            dx.data_mut(),
            in_dim as isize,
        );
        Ok(dx)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: Tensor::zeros(self.weight.shape()),
            bias: Tensor::zeros(self.bias.shape()),
        }
    }
}

impl ParamPack for LinearLayer {
    fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        self.weight.pack_into(out);
        self.bias.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.weight.unpack_from(src)?;
        self.bias.unpack_from(src)
    }
}

/// Feed-forward MLP. Activation is applied between layers; the output is
/// linear unless `final_activation` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<LinearLayer>,
    pub activation: Activation,
    pub final_activation: bool,
}

/// Forward cache: per-layer inputs and pre-activation outputs.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Tensor>,
    preacts: Vec<Tensor>,
}

impl Mlp {
    /// Glorot-uniform MLP over the dimension chain `dims`.
    pub fn new(
        dims: &[usize],
        activation: Activation,
        final_activation: bool,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| LinearLayer::new(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            activation,
            final_activation,
        }
    }

    /// Identity-configured MLP: identity weights, zero biases.
    pub fn identity(dim: usize, n_layers: usize, activation: Activation) -> Self {
        Self {
            layers: (0..n_layers).map(|_| LinearLayer::identity(dim)).collect(),
            activation,
            final_activation: false,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    fn activates_at(&self, layer_idx: usize) -> bool {
        layer_idx + 1 < self.layers.len() || self.final_activation
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, MlpCache)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let z = layer.forward(&cur)?;
            cur = if self.activates_at(l) {
                z.map(|v| self.activation.apply(v))
            } else {
                z.clone()
            };
            preacts.push(z);
        }
        Ok((cur, MlpCache { inputs, preacts }))
    }

    /// Reverse-mode gradients. Accumulates parameter grads into `grads`
    /// (an `Mlp` of the same shape) and returns dL/dx.
    pub fn backward(&self, cache: &MlpCache, upstream: &Tensor, grads: &mut Mlp) -> Result<Tensor> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Dimension("grad accumulator shape mismatch".into()));
        }
        let mut g = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            if self.activates_at(l) {
                let z = &cache.preacts[l];
                if g.shape() != z.shape() {
                    return Err(Error::Dimension(format!(
                        "upstream shape {:?} vs layer output {:?}",
                        g.shape(),
                        z.shape()
                    )));
                }
                let act = self.activation;
                let gd = g.data_mut();
                for (gv, &zv) in gd.iter_mut().zip(z.data()) {
                    *gv *= act.derivative(zv);
                }
            }
            g = self.layers[l].backward(&cache.inputs[l], &g, &mut grads.layers[l])?;
        }
        Ok(g)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(LinearLayer::zeros_like).collect(),
            activation: self.activation,
            final_activation: self.final_activation,
        }
    }
}

impl ParamPack for Mlp {
    fn num_params(&self) -> usize {
        self.layers.iter().map(ParamPack::num_params).sum()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.pack_into(out);
        }
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        for l in &mut self.layers {
            l.unpack_from(src)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::finite_difference_check;
    use crate::nn::loss::mse_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_map_passes_through() {
        let mlp = Mlp::identity(2, 1, Activation::Relu);
        let x = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let y = mlp.forward(&x).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
    }

    #[test]
    fn final_relu_clamps_negatives() {
        let mut mlp = Mlp::identity(2, 1, Activation::Relu);
        mlp.final_activation = true;
        let x = Tensor::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        let y = mlp.forward(&x).unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn two_layer_hand_evaluated() {
        // 3 * max(0, 2*2 - 1) = 9
        let mlp = Mlp {
            layers: vec![
                LinearLayer {
                    weight: Tensor::new(vec![1, 1], vec![2.0]).unwrap(),
                    bias: Tensor::vector(vec![-1.0]),
                },
                LinearLayer {
                    weight: Tensor::new(vec![1, 1], vec![3.0]).unwrap(),
                    bias: Tensor::vector(vec![0.0]),
                },
            ],
            activation: Activation::Relu,
            final_activation: false,
        };
        let y = mlp.forward(&Tensor::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        assert_eq!(y.data(), &[9.0]);
    }

    #[test]
    fn identity_config_is_identity_on_nonnegative_inputs() {
        let mlp = Mlp::identity(3, 4, Activation::Relu);
        let x = Tensor::from_rows(&[vec![0.0, 1.5, 2.0], vec![0.3, 0.0, 7.0]]).unwrap();
        assert_eq!(mlp.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mlp = Mlp::new(&[3, 4, 2], Activation::Relu, false, &mut rng);
        let x = Tensor::from_rows(&[vec![0.1, -0.2, 0.3]]).unwrap();
        let (_, cache) = mlp.forward_cached(&x).unwrap();
        let mut grads = mlp.zeros_like();
        let dx = mlp
            .backward(&cache, &Tensor::zeros(&[1, 2]), &mut grads)
            .unwrap();
        assert!(grads.pack().iter().all(|&g| g == 0.0));
        assert!(dx.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_linear_layer_grads_are_closed_form() {
        // input_grad = W^T g, weight_grad = g x^T (row-major: dW = g^T x)
        let layer = LinearLayer {
            weight: Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            bias: Tensor::zeros(&[2]),
        };
        let mlp = Mlp {
            layers: vec![layer],
            activation: Activation::Relu,
            final_activation: false,
        };
        let x = Tensor::from_rows(&[vec![5.0, 6.0]]).unwrap();
        let (_, cache) = mlp.forward_cached(&x).unwrap();
        let g = Tensor::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let mut grads = mlp.zeros_like();
        let dx = mlp.backward(&cache, &g, &mut grads).unwrap();
        // W^T g = [1*1 + 3*(-1), 2*1 + 4*(-1)] = [-2, -2]
        assert_eq!(dx.data(), &[-2.0, -2.0]);
        // dW rows: g_o * x
        assert_eq!(grads.layers[0].weight.data(), &[5.0, 6.0, -5.0, -6.0]);
        assert_eq!(grads.layers[0].bias.data(), &[1.0, -1.0]);
    }

    #[test]
    fn random_mlp_matches_finite_differences() {
        for (seed, act, final_act) in [
            (7u64, Activation::Relu, false),
            (8, Activation::Silu, false),
            (9, Activation::Silu, true),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mlp = Mlp::new(&[4, 6, 3], act, final_act, &mut rng);
            let x = Tensor::new(
                vec![2, 4],
                (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let target = Tensor::new(
                vec![2, 3],
                (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();

            let theta = mlp.pack();
            let (_, cache) = mlp.forward_cached(&x).unwrap();
            let y = mlp.forward(&x).unwrap();
            let (_, dpred) = mse_loss(&y, &target).unwrap();
            let mut grads = mlp.zeros_like();
            mlp.backward(&cache, &dpred, &mut grads).unwrap();

            let mut probe = mlp.clone();
            let err = finite_difference_check(
                &mut |p: &[f64]| {
                    probe.unpack(p)?;
                    let y = probe.forward(&x)?;
                    Ok(mse_loss(&y, &target)?.0)
                },
                &theta,
                &grads.pack(),
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-6, "seed {seed}: rel err {err}");
        }
    }
}
