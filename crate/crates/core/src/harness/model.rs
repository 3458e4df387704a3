//! Task models: GINE stacks on Coulomb-matrix graphs, EGNN stacks on
//! point clouds, and linear filter models on a planted shift pair.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{
    binary_edge_features, coulomb_matrix, coulomb_node_features, partition_by_radii,
    partition_by_threshold, radius_graph, rbf_edge_features, threshold_graph, Graph, GraphTuple,
    BINARY_EXPANSION_DIM,
};
use crate::layers::{
    egcl_backward, egcl_cached, egnn_gt_backward, egnn_gt_layer_cached, gine_conv_backward,
    gine_conv_cached, gine_gt_backward, gine_gt_layer_cached, global_mean_pool,
    global_mean_pool_backward, EgclCache, EgclParams, EgnnGtCache, EgnnGtParams, GineCache,
    GineGtCache, GineGtParams, GineParams,
};
use crate::nn::loss::{l1_loss, mse_loss};
use crate::nn::params::{ParamCursor, ParamPack};
use crate::nn::{Activation, LinearLayer, Mlp};
use crate::tensor::Tensor;
use crate::theory::{build_basis, FilterClass, ShiftPair};

use super::config::{ExperimentConfig, LossKind, ModelKind};
use super::data::Sample;

/// Dimension of the RBF edge encoding on point-cloud graphs.
pub const RBF_DIM: usize = 32;

impl LossKind {
    /// Loss value and gradient w.r.t. the prediction.
    pub fn apply(&self, pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
        match self {
            LossKind::L1 => l1_loss(pred, target),
            LossKind::Mse => mse_loss(pred, target),
        }
    }
}

/// A model over prepared per-sample inputs. `prepare` factors the
/// parameter-independent graph construction out of the training loop;
/// parameters travel through [`ParamPack`].
pub trait GraphModel: ParamPack + Sized {
    type Prep;

    fn prepare(&self, sample: &Sample) -> Result<Self::Prep>;
    /// A same-shape zero holder for gradient accumulation.
    fn zero_grads(&self) -> Self;
    fn forward(&self, prep: &Self::Prep) -> Result<Tensor>;
    /// Adds this sample's parameter gradients to `grads`, returning the
    /// loss value.
    fn forward_backward(
        &self,
        prep: &Self::Prep,
        target: &Tensor,
        loss: LossKind,
        grads: &mut Self,
    ) -> Result<f64>;
}

/// Parameter-independent per-sample inputs shared by the graph tasks.
pub enum PreparedViews {
    Single(Graph),
    Tuple(GraphTuple),
}

// ---------------------------------------------------------------------
// Molecule task: GINE stacks over threshold views of the Coulomb matrix.
// ---------------------------------------------------------------------

pub enum GineStack {
    Single(Vec<GineParams>),
    Tuple(Vec<GineGtParams>),
}

pub struct MoleculeModel {
    pub threshold: f64,
    pub embed: LinearLayer,
    pub stack: GineStack,
    pub head: Mlp,
}

pub struct MoleculePrep {
    h0: Tensor,
    views: PreparedViews,
}

enum GineStackCache {
    Single(Vec<GineCache>),
    Tuple(Vec<GineGtCache>),
}

impl MoleculeModel {
    pub fn new(cfg: &ExperimentConfig, n_targets: usize, rng: &mut impl Rng) -> Result<Self> {
        let threshold = cfg
            .threshold
            .ok_or_else(|| Error::Config("molecule model requires `threshold`".into()))?;
        let d = cfg.hidden;
        let stack = match cfg.model {
            ModelKind::SingleGraph => GineStack::Single(
                (0..cfg.layers)
                    .map(|_| GineParams::new(d, BINARY_EXPANSION_DIM, rng))
                    .collect(),
            ),
            ModelKind::GraphTuple => GineStack::Tuple(
                (0..cfg.layers)
                    .map(|_| GineGtParams::new(2, d, BINARY_EXPANSION_DIM, rng))
                    .collect(),
            ),
        };
        Ok(Self {
            threshold,
            embed: LinearLayer::new(BINARY_EXPANSION_DIM, d, rng),
            stack,
            head: Mlp::new(&[d, d, n_targets], Activation::Relu, false, rng),
        })
    }

    fn forward_cached(
        &self,
        prep: &MoleculePrep,
    ) -> Result<(Tensor, GineStackCache, crate::nn::MlpCache)> {
        let mut h = self.embed.forward(&prep.h0)?;
        let cache = match (&self.stack, &prep.views) {
            (GineStack::Single(layers), PreparedViews::Single(g)) => {
                let mut caches = Vec::with_capacity(layers.len());
                for p in layers {
                    let (h_next, c) = gine_conv_cached(&h, g, p)?;
                    caches.push(c);
                    h = h_next;
                }
                GineStackCache::Single(caches)
            }
            (GineStack::Tuple(layers), PreparedViews::Tuple(t)) => {
                let mut caches = Vec::with_capacity(layers.len());
                for p in layers {
                    let (h_next, c) = gine_gt_layer_cached(&h, t, p)?;
                    caches.push(c);
                    h = h_next;
                }
                GineStackCache::Tuple(caches)
            }
            _ => return Err(Error::Config("model kind does not match prepared views".into())),
        };
        let pooled = global_mean_pool(&h)?;
        let pooled_row = Tensor::new(vec![1, pooled.len()], pooled.data().to_vec())?;
        let (pred, head_cache) = self.head.forward_cached(&pooled_row)?;
        Ok((pred, cache, head_cache))
    }
}

impl ParamPack for MoleculeModel {
    fn num_params(&self) -> usize {
        let stack = match &self.stack {
            GineStack::Single(v) => v.iter().map(|p| p.num_params()).sum::<usize>(),
            GineStack::Tuple(v) => v.iter().map(|p| p.num_params()).sum::<usize>(),
        };
        self.embed.num_params() + stack + self.head.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        self.embed.pack_into(out);
        match &self.stack {
            GineStack::Single(v) => v.iter().for_each(|p| p.pack_into(out)),
            GineStack::Tuple(v) => v.iter().for_each(|p| p.pack_into(out)),
        }
        self.head.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.embed.unpack_from(src)?;
        match &mut self.stack {
            GineStack::Single(v) => {
                for p in v {
                    p.unpack_from(src)?;
                }
            }
            GineStack::Tuple(v) => {
                for p in v {
                    p.unpack_from(src)?;
                }
            }
        }
        self.head.unpack_from(src)
    }
}

impl GraphModel for MoleculeModel {
    type Prep = MoleculePrep;

    fn prepare(&self, sample: &Sample) -> Result<MoleculePrep> {
        let cloud = sample.point_cloud()?;
        if cloud.charges().is_none() {
            return Err(Error::Domain("molecule sample has no charges".into()));
        }
        let cm = coulomb_matrix(&cloud)?;
        let h0 = coulomb_node_features(&cm)?;
        let views = match &self.stack {
            GineStack::Single(_) => {
                let g = threshold_graph(&cm, self.threshold)?;
                let feat = binary_edge_features(&g)?;
                PreparedViews::Single(g.with_features(feat)?)
            }
            GineStack::Tuple(_) => {
                let t = partition_by_threshold(&cm, self.threshold)?;
                let views: Result<Vec<Graph>> = t
                    .views
                    .into_iter()
                    .map(|g| {
                        let feat = binary_edge_features(&g)?;
                        g.with_features(feat)
                    })
                    .collect();
                PreparedViews::Tuple(GraphTuple::new(views?, t.boundaries)?)
            }
        };
        Ok(MoleculePrep { h0, views })
    }

    fn zero_grads(&self) -> Self {
        Self {
            threshold: self.threshold,
            embed: self.embed.zeros_like(),
            stack: match &self.stack {
                GineStack::Single(v) => {
                    GineStack::Single(v.iter().map(|p| p.zeros_like()).collect())
                }
                GineStack::Tuple(v) => GineStack::Tuple(v.iter().map(|p| p.zeros_like()).collect()),
            },
            head: self.head.zeros_like(),
        }
    }

    fn forward(&self, prep: &MoleculePrep) -> Result<Tensor> {
        Ok(self.forward_cached(prep)?.0)
    }

    fn forward_backward(
        &self,
        prep: &MoleculePrep,
        target: &Tensor,
        loss: LossKind,
        grads: &mut Self,
    ) -> Result<f64> {
        let (pred, stack_cache, head_cache) = self.forward_cached(prep)?;
        let (loss_val, d_pred) = loss.apply(&pred, target)?;
        let d_pooled_row = self.head.backward(&head_cache, &d_pred, &mut grads.head)?;
        let n = prep.h0.rows();
        let d_pooled = Tensor::vector(d_pooled_row.data().to_vec());
        let mut d_h = global_mean_pool_backward(n, &d_pooled)?;
        match (&self.stack, &stack_cache, &mut grads.stack, &prep.views) {
            (
                GineStack::Single(layers),
                GineStackCache::Single(caches),
                GineStack::Single(g_layers),
                PreparedViews::Single(g),
            ) => {
                for i in (0..layers.len()).rev() {
                    d_h = gine_conv_backward(g, &layers[i], &caches[i], &d_h, &mut g_layers[i])?;
                }
            }
            (
                GineStack::Tuple(layers),
                GineStackCache::Tuple(caches),
                GineStack::Tuple(g_layers),
                PreparedViews::Tuple(t),
            ) => {
                for i in (0..layers.len()).rev() {
                    d_h = gine_gt_backward(t, &layers[i], &caches[i], &d_h, &mut g_layers[i])?;
                }
            }
            _ => return Err(Error::Config("model kind does not match prepared views".into())),
        }
        self.embed.backward(&prep.h0, &d_h, &mut grads.embed)?;
        Ok(loss_val)
    }
}

// ---------------------------------------------------------------------
// Point-cloud task: EGNN stacks over radius views.
// ---------------------------------------------------------------------

pub enum EgnnStack {
    Single(Vec<EgclParams>),
    Tuple(Vec<EgnnGtParams>),
}

pub struct CloudModel {
    pub radii: (f64, f64),
    pub embed: LinearLayer,
    pub stack: EgnnStack,
    pub head: Mlp,
}

pub struct CloudPrep {
    h0: Tensor,
    x0: Tensor,
    views: PreparedViews,
}

enum EgnnStackCache {
    Single(Vec<EgclCache>),
    /// Layer caches plus each layer's input coordinates (the tuple
    /// backward needs them explicitly).
    Tuple(Vec<(EgnnGtCache, Tensor)>),
}

impl CloudModel {
    pub fn new(cfg: &ExperimentConfig, n_targets: usize, rng: &mut impl Rng) -> Result<Self> {
        let radii = cfg
            .radii
            .ok_or_else(|| Error::Config("cloud model requires `radii`".into()))?;
        let d = cfg.hidden;
        let stack = match cfg.model {
            ModelKind::SingleGraph => EgnnStack::Single(
                (0..cfg.layers).map(|_| EgclParams::new(d, RBF_DIM, rng)).collect(),
            ),
            ModelKind::GraphTuple => EgnnStack::Tuple(
                (0..cfg.layers)
                    .map(|_| EgnnGtParams::new(2, d, RBF_DIM, rng))
                    .collect(),
            ),
        };
        Ok(Self {
            radii,
            embed: LinearLayer::new(1, d, rng),
            stack,
            head: Mlp::new(&[d, d, n_targets], Activation::Silu, false, rng),
        })
    }

    fn forward_cached(
        &self,
        prep: &CloudPrep,
    ) -> Result<(Tensor, EgnnStackCache, crate::nn::MlpCache)> {
        let mut h = self.embed.forward(&prep.h0)?;
        let mut x = prep.x0.clone();
        let cache = match (&self.stack, &prep.views) {
            (EgnnStack::Single(layers), PreparedViews::Single(g)) => {
                let mut caches = Vec::with_capacity(layers.len());
                for p in layers {
                    let ((h_next, x_next), c) = egcl_cached(&h, &x, g, p)?;
                    caches.push(c);
                    h = h_next;
                    x = x_next;
                }
                EgnnStackCache::Single(caches)
            }
            (EgnnStack::Tuple(layers), PreparedViews::Tuple(t)) => {
                let mut caches = Vec::with_capacity(layers.len());
                for p in layers {
                    let ((h_next, x_next), c) = egnn_gt_layer_cached(&h, &x, t, p)?;
                    caches.push((c, x.clone()));
                    h = h_next;
                    x = x_next;
                }
                EgnnStackCache::Tuple(caches)
            }
            _ => return Err(Error::Config("model kind does not match prepared views".into())),
        };
        let pooled = global_mean_pool(&h)?;
        let pooled_row = Tensor::new(vec![1, pooled.len()], pooled.data().to_vec())?;
        let (pred, head_cache) = self.head.forward_cached(&pooled_row)?;
        Ok((pred, cache, head_cache))
    }
}

impl ParamPack for CloudModel {
    fn num_params(&self) -> usize {
        let stack = match &self.stack {
            EgnnStack::Single(v) => v.iter().map(|p| p.num_params()).sum::<usize>(),
            EgnnStack::Tuple(v) => v.iter().map(|p| p.num_params()).sum::<usize>(),
        };
        self.embed.num_params() + stack + self.head.num_params()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        self.embed.pack_into(out);
        match &self.stack {
            EgnnStack::Single(v) => v.iter().for_each(|p| p.pack_into(out)),
            EgnnStack::Tuple(v) => v.iter().for_each(|p| p.pack_into(out)),
        }
        self.head.pack_into(out);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        self.embed.unpack_from(src)?;
        match &mut self.stack {
            EgnnStack::Single(v) => {
                for p in v {
                    p.unpack_from(src)?;
                }
            }
            EgnnStack::Tuple(v) => {
                for p in v {
                    p.unpack_from(src)?;
                }
            }
        }
        self.head.unpack_from(src)
    }
}

impl GraphModel for CloudModel {
    type Prep = CloudPrep;

    fn prepare(&self, sample: &Sample) -> Result<CloudPrep> {
        let cloud = sample.point_cloud()?;
        let pos = cloud.positions().clone();
        let n = pos.rows();
        let (c1, c2) = self.radii;
        let views = match &self.stack {
            EgnnStack::Single(_) => {
                let g = radius_graph(&pos, c2)?;
                let feat = rbf_edge_features(&g, RBF_DIM, c2)?;
                PreparedViews::Single(g.with_features(feat)?)
            }
            EgnnStack::Tuple(_) => {
                let t = partition_by_radii(&pos, c1, c2)?;
                let views: Result<Vec<Graph>> = t
                    .views
                    .into_iter()
                    .map(|g| {
                        let feat = rbf_edge_features(&g, RBF_DIM, c2)?;
                        g.with_features(feat)
                    })
                    .collect();
                PreparedViews::Tuple(GraphTuple::new(views?, t.boundaries)?)
            }
        };
        Ok(CloudPrep {
            h0: Tensor::filled(&[n, 1], 1.0),
            x0: pos,
            views,
        })
    }

    fn zero_grads(&self) -> Self {
        Self {
            radii: self.radii,
            embed: self.embed.zeros_like(),
            stack: match &self.stack {
                EgnnStack::Single(v) => {
                    EgnnStack::Single(v.iter().map(|p| p.zeros_like()).collect())
                }
                EgnnStack::Tuple(v) => EgnnStack::Tuple(v.iter().map(|p| p.zeros_like()).collect()),
            },
            head: self.head.zeros_like(),
        }
    }

    fn forward(&self, prep: &CloudPrep) -> Result<Tensor> {
        Ok(self.forward_cached(prep)?.0)
    }

    fn forward_backward(
        &self,
        prep: &CloudPrep,
        target: &Tensor,
        loss: LossKind,
        grads: &mut Self,
    ) -> Result<f64> {
        let (pred, stack_cache, head_cache) = self.forward_cached(prep)?;
        let (loss_val, d_pred) = loss.apply(&pred, target)?;
        let d_pooled_row = self.head.backward(&head_cache, &d_pred, &mut grads.head)?;
        let n = prep.h0.rows();
        let d_pooled = Tensor::vector(d_pooled_row.data().to_vec());
        let mut d_h = global_mean_pool_backward(n, &d_pooled)?;
        let mut d_x = Tensor::zeros(&[n, 3]);
        match (&self.stack, &stack_cache, &mut grads.stack, &prep.views) {
            (
                EgnnStack::Single(layers),
                EgnnStackCache::Single(caches),
                EgnnStack::Single(g_layers),
                PreparedViews::Single(g),
            ) => {
                for i in (0..layers.len()).rev() {
                    let (dh, dx) =
                        egcl_backward(g, &layers[i], &caches[i], &d_h, &d_x, &mut g_layers[i])?;
                    d_h = dh;
                    d_x = dx;
                }
            }
            (
                EgnnStack::Tuple(layers),
                EgnnStackCache::Tuple(caches),
                EgnnStack::Tuple(g_layers),
                PreparedViews::Tuple(t),
            ) => {
                for i in (0..layers.len()).rev() {
                    let (cache, x_in) = &caches[i];
                    let (dh, dx) = egnn_gt_backward(
                        x_in,
                        t,
                        &layers[i],
                        cache,
                        &d_h,
                        &d_x,
                        &mut g_layers[i],
                    )?;
                    d_h = dh;
                    d_x = dx;
                }
            }
            _ => return Err(Error::Config("model kind does not match prepared views".into())),
        }
        self.embed.backward(&prep.h0, &d_h, &mut grads.embed)?;
        Ok(loss_val)
    }
}

// ---------------------------------------------------------------------
// Planted-filter task: linear combinations of a fixed filter basis.
// ---------------------------------------------------------------------

pub struct FilterModel {
    pub class: FilterClass,
    /// Word/power matrices of the underlying shift pair (fixed).
    pub basis: Vec<Tensor>,
    /// Learned combination coefficients — the only parameters.
    pub coeffs: Vec<f64>,
}

pub struct FilterPrep {
    /// Row `i` holds `basis[i] · x`.
    feats: Tensor,
}

impl FilterModel {
    /// A zero-initialized filter of the given class and degree over the
    /// planted shift pair.
    pub fn new(class: FilterClass, degree: usize, s: &ShiftPair, sigma: &Tensor) -> Result<Self> {
        let basis = build_basis(class, degree, s, sigma)?;
        let p = basis.matrices.len();
        Ok(Self {
            class,
            basis: basis.matrices,
            coeffs: vec![0.0; p],
        })
    }

    /// The current filter matrix `sum_i coeffs[i] basis[i]`.
    pub fn matrix(&self) -> Result<Tensor> {
        super::data::combine_matrices(&self.basis, &self.coeffs)
    }
}

impl ParamPack for FilterModel {
    fn num_params(&self) -> usize {
        self.coeffs.len()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.coeffs);
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        let vals = src.take(self.coeffs.len())?;
        self.coeffs.copy_from_slice(vals);
        Ok(())
    }
}

impl GraphModel for FilterModel {
    type Prep = FilterPrep;

    fn prepare(&self, sample: &Sample) -> Result<FilterPrep> {
        let x = sample
            .x
            .as_ref()
            .ok_or_else(|| Error::Domain("planted-filter sample has no input signal `x`".into()))?;
        let n = x.len();
        let mut feats = Tensor::zeros(&[self.basis.len(), n]);
        for (i, b) in self.basis.iter().enumerate() {
            let bx = b.matvec(x)?;
            feats.row_mut(i).copy_from_slice(&bx);
        }
        Ok(FilterPrep { feats })
    }

    fn zero_grads(&self) -> Self {
        Self {
            class: self.class,
            basis: self.basis.clone(),
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    fn forward(&self, prep: &FilterPrep) -> Result<Tensor> {
        let n = prep.feats.cols();
        let mut pred = Tensor::zeros(&[1, n]);
        for (i, &c) in self.coeffs.iter().enumerate() {
            for j in 0..n {
                *pred.at_mut(0, j) += c * prep.feats.at(i, j);
            }
        }
        Ok(pred)
    }

    fn forward_backward(
        &self,
        prep: &FilterPrep,
        target: &Tensor,
        loss: LossKind,
        grads: &mut Self,
    ) -> Result<f64> {
        let pred = self.forward(prep)?;
        let (loss_val, d_pred) = loss.apply(&pred, target)?;
        for (i, g) in grads.coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..prep.feats.cols() {
                acc += d_pred.at(0, j) * prep.feats.at(i, j);
            }
            *g += acc;
        }
        Ok(loss_val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::data::{
        generate_planted_filter_dataset, generate_synthetic_clouds, generate_synthetic_molecules,
    };
    use crate::nn::finite_difference_check;
    use crate::theory::random_shift_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg(task: super::super::config::Task, model: ModelKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_for(task);
        cfg.model = model;
        cfg.hidden = 6;
        cfg.layers = 2;
        cfg
    }

    fn fd_check<M: GraphModel>(model: &M, prep: &M::Prep, target: &Tensor, loss: LossKind) -> f64 {
        let mut grads = model.zero_grads();
        model.forward_backward(prep, target, loss, &mut grads).unwrap();
        let mut probe = model.zero_grads();
        probe.unpack(&model.pack()).unwrap();
        finite_difference_check(
            &mut |p: &[f64]| {
                probe.unpack(p)?;
                Ok(loss.apply(&probe.forward(prep)?, target)?.0)
            },
            &model.pack(),
            &grads.pack(),
            1e-6,
        )
        .unwrap()
    }

    #[test]
    fn molecule_model_end_to_end_gradients() {
        use super::super::config::Task;
        let samples = generate_synthetic_molecules(2, 4..=6, 21).unwrap();
        for kind in [ModelKind::SingleGraph, ModelKind::GraphTuple] {
            let cfg = small_cfg(Task::Molecule, kind);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let model = MoleculeModel::new(&cfg, 14, &mut rng).unwrap();
            let prep = model.prepare(&samples[0]).unwrap();
            let target = samples[0].target_row();
            let pred = model.forward(&prep).unwrap();
            assert_eq!(pred.shape(), &[1, 14]);
            for loss in [LossKind::Mse, LossKind::L1] {
                let err = fd_check(&model, &prep, &target, loss);
                assert!(err < 1e-5, "{kind:?} {loss:?}: {err}");
            }
        }
    }

    #[test]
    fn cloud_model_end_to_end_gradients() {
        use super::super::config::Task;
        let samples = generate_synthetic_clouds(1, 8, 22).unwrap();
        for kind in [ModelKind::SingleGraph, ModelKind::GraphTuple] {
            let cfg = small_cfg(Task::Pointcloud, kind);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let model = CloudModel::new(&cfg, 2, &mut rng).unwrap();
            let prep = model.prepare(&samples[0]).unwrap();
            let target = samples[0].target_row();
            let pred = model.forward(&prep).unwrap();
            assert_eq!(pred.shape(), &[1, 2]);
            let err = fd_check(&model, &prep, &target, LossKind::Mse);
            assert!(err < 1e-5, "{kind:?}: {err}");
        }
    }

    #[test]
    fn filter_model_gradients_and_recovery_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_shift_pair(3, false, &mut rng);
        let sigma = Tensor::eye(3);
        let (samples, _) =
            generate_planted_filter_dataset(&s, &[0.3, 1.0], 0.7, &sigma, 0.01, 2, 4, 9).unwrap();
        let mut model = FilterModel::new(FilterClass::HGt, 2, &s, &sigma).unwrap();
        for c in model.coeffs.iter_mut() {
            *c = rng.gen_range(-0.5..0.5);
        }
        let prep = model.prepare(&samples[0]).unwrap();
        let target = samples[0].target_row();
        assert_eq!(model.forward(&prep).unwrap().shape(), &[1, 3]);
        let err = fd_check(&model, &prep, &target, LossKind::Mse);
        assert!(err < 1e-6, "{err}");
        assert_eq!(model.coeffs.len(), 7, "2^(2+1) - 1 words");
        let tied = FilterModel::new(FilterClass::H0, 2, &s, &sigma).unwrap();
        assert_eq!(tied.coeffs.len(), 3, "degrees 0..=2");
    }

    #[test]
    fn single_graph_sees_view_one_edges() {
        use super::super::config::Task;
        let samples = generate_synthetic_molecules(3, 5..=7, 33).unwrap();
        let cfg_single = small_cfg(Task::Molecule, ModelKind::SingleGraph);
        let cfg_tuple = small_cfg(Task::Molecule, ModelKind::GraphTuple);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let single = MoleculeModel::new(&cfg_single, 14, &mut rng).unwrap();
        let tuple = MoleculeModel::new(&cfg_tuple, 14, &mut rng).unwrap();
        for s in &samples {
            let ps = single.prepare(s).unwrap();
            let pt = tuple.prepare(s).unwrap();
            match (&ps.views, &pt.views) {
                (PreparedViews::Single(g), PreparedViews::Tuple(t)) => {
                    assert_eq!(g.edge_set(), t.views[0].edge_set());
                    assert!(t.views_disjoint());
                    assert!(t.union_is_complete());
                }
                _ => panic!("unexpected prep"),
            }
        }
    }
}
