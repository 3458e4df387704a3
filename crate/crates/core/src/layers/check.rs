//! Randomized verification entry points for the layers: finite
//! difference gradient checks and E(3)/permutation equivariance.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphTuple};
use crate::nn::loss::mse_loss;
use crate::nn::params::ParamPack;
use crate::nn::finite_difference_check;
use crate::tensor::Tensor;

use super::egcl::{egcl, egcl_backward, egcl_cached, EgclParams};
use super::gine::{gine_conv, gine_conv_backward, gine_conv_cached, GineParams};
use super::gt::{
    egnn_gt_backward, egnn_gt_layer, egnn_gt_layer_cached, gine_gt_backward, gine_gt_layer,
    gine_gt_layer_cached, EgnnGtParams, GineGtParams,
};

/// Which layer a check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    GineConv,
    Egcl,
    GineGt,
    EgnnGt,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [
        LayerKind::GineConv,
        LayerKind::Egcl,
        LayerKind::GineGt,
        LayerKind::EgnnGt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::GineConv => "gine_conv",
            LayerKind::Egcl => "egcl",
            LayerKind::GineGt => "gine_gt",
            LayerKind::EgnnGt => "egnn_gt",
        }
    }
}

impl std::str::FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gine_conv" | "gine-conv" => Ok(LayerKind::GineConv),
            "egcl" => Ok(LayerKind::Egcl),
            "gine_gt" | "gine-gt" => Ok(LayerKind::GineGt),
            "egnn_gt" | "egnn-gt" => Ok(LayerKind::EgnnGt),
            other => Err(Error::Config(format!(
                "unknown layer '{other}' (expected gine_conv, egcl, gine_gt, or egnn_gt)"
            ))),
        }
    }
}

struct Instance {
    n: usize,
    d: usize,
    tuple: GraphTuple,
    h: Tensor,
    x: Tensor,
    h_target: Tensor,
    x_target: Tensor,
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let len: usize = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .expect("shape matches data")
}

fn random_instance(rng: &mut ChaCha8Rng, edge_dim: usize) -> Instance {
    let n = rng.gen_range(2..=8usize);
    let d = rng.gen_range(2..=16usize);

    // Random symmetric edge pattern, each unordered pair assigned to
    // one of two views (or dropped).
    let mut view_pairs: [Vec<(usize, usize)>; 2] = [vec![], vec![]];
    for i in 0..n {
        for j in (i + 1)..n {
            match rng.gen_range(0..3u8) {
                0 => view_pairs[0].push((i, j)),
                1 => view_pairs[1].push((i, j)),
                _ => {}
            }
        }
    }
    let views: Vec<Graph> = view_pairs
        .iter()
        .map(|pairs| {
            let mut edges = Vec::with_capacity(pairs.len() * 2);
            for &(i, j) in pairs {
                edges.push((i, j));
                edges.push((j, i));
            }
            let m = edges.len();
            let mut feat_rows = Vec::with_capacity(m);
            for _ in 0..m {
                feat_rows.push((0..edge_dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
            }
            let feat = if m == 0 {
                Tensor::zeros(&[0, edge_dim])
            } else {
                Tensor::from_rows(&feat_rows).expect("uniform rows")
            };
            Graph::new(n, edges, vec![1.0; m])
                .expect("valid edges")
                .with_features(feat)
                .expect("feature rows match edges")
        })
        .collect();
    let tuple = GraphTuple::new(views, vec![]).expect("same node count");

    Instance {
        n,
        d,
        h: rand_tensor(rng, &[n, d]),
        x: rand_tensor(rng, &[n, 3]),
        h_target: rand_tensor(rng, &[n, d]),
        x_target: rand_tensor(rng, &[n, 3]),
        tuple,
    }
}

fn random_combiner(rng: &mut ChaCha8Rng, c_intra: &mut [f64], c_inter: &mut [f64]) {
    for c in c_intra.iter_mut() {
        *c = rng.gen_range(0.2..0.8);
    }
    for c in c_inter.iter_mut() {
        *c = rng.gen_range(-0.5..0.5);
    }
}

/// Runs `instances` random finite-difference checks for `kind` and
/// returns the worst relative error over parameter and input gradients.
pub fn layer_gradient_check(
    kind: LayerKind,
    instances: usize,
    seed: u64,
    h_step: f64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let edge_dim = rng.gen_range(0..=4usize);
        let inst = random_instance(&mut rng, edge_dim);
        let err = match kind {
            LayerKind::GineConv => gine_instance_err(&mut rng, &inst, edge_dim, h_step)?,
            LayerKind::Egcl => egcl_instance_err(&mut rng, &inst, edge_dim, h_step)?,
            LayerKind::GineGt => gine_gt_instance_err(&mut rng, &inst, edge_dim, h_step)?,
            LayerKind::EgnnGt => egnn_gt_instance_err(&mut rng, &inst, edge_dim, h_step)?,
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

fn gine_instance_err(
    rng: &mut ChaCha8Rng,
    inst: &Instance,
    edge_dim: usize,
    h_step: f64,
) -> Result<f64> {
    let params = GineParams::new(inst.d, edge_dim, rng);
    let g = &inst.tuple.views[0];
    let (out, cache) = gine_conv_cached(&inst.h, g, &params)?;
    let (_, d_out) = mse_loss(&out, &inst.h_target)?;
    let mut grads = params.zeros_like();
    let dh = gine_conv_backward(g, &params, &cache, &d_out, &mut grads)?;

    let mut probe = params.clone();
    let err_p = finite_difference_check(
        &mut |p| {
            probe.unpack(p)?;
            Ok(mse_loss(&gine_conv(&inst.h, g, &probe)?, &inst.h_target)?.0)
        },
        &params.pack(),
        &grads.pack(),
        h_step,
    )?;
    let shape = inst.h.shape().to_vec();
    let err_h = finite_difference_check(
        &mut |p| {
            let hp = Tensor::new(shape.clone(), p.to_vec())?;
            Ok(mse_loss(&gine_conv(&hp, g, &params)?, &inst.h_target)?.0)
        },
        inst.h.data(),
        dh.data(),
        h_step,
    )?;
    Ok(err_p.max(err_h))
}

fn egcl_instance_err(
    rng: &mut ChaCha8Rng,
    inst: &Instance,
    edge_dim: usize,
    h_step: f64,
) -> Result<f64> {
    let params = EgclParams::new(inst.d, edge_dim, rng);
    let g = &inst.tuple.views[0];
    let loss = |p: &EgclParams, h: &Tensor, x: &Tensor| -> Result<f64> {
        let (ho, xo) = egcl(h, x, g, p)?;
        Ok(mse_loss(&ho, &inst.h_target)?.0 + mse_loss(&xo, &inst.x_target)?.0)
    };
    let ((h_out, x_out), cache) = egcl_cached(&inst.h, &inst.x, g, &params)?;
    let (_, d_h) = mse_loss(&h_out, &inst.h_target)?;
    let (_, d_x) = mse_loss(&x_out, &inst.x_target)?;
    let mut grads = params.zeros_like();
    let (dh, dx) = egcl_backward(g, &params, &cache, &d_h, &d_x, &mut grads)?;

    let mut probe = params.clone();
    let err_p = finite_difference_check(
        &mut |p| {
            probe.unpack(p)?;
            loss(&probe, &inst.h, &inst.x)
        },
        &params.pack(),
        &grads.pack(),
        h_step,
    )?;
    let h_shape = inst.h.shape().to_vec();
    let err_h = finite_difference_check(
        &mut |p| loss(&params, &Tensor::new(h_shape.clone(), p.to_vec())?, &inst.x),
        inst.h.data(),
        dh.data(),
        h_step,
    )?;
    let err_x = finite_difference_check(
        &mut |p| loss(&params, &inst.h, &Tensor::new(vec![inst.n, 3], p.to_vec())?),
        inst.x.data(),
        dx.data(),
        h_step,
    )?;
    Ok(err_p.max(err_h).max(err_x))
}

fn gine_gt_instance_err(
    rng: &mut ChaCha8Rng,
    inst: &Instance,
    edge_dim: usize,
    h_step: f64,
) -> Result<f64> {
    let mut params = GineGtParams::new(2, inst.d, edge_dim, rng);
    random_combiner(rng, &mut params.combiner.c_intra, &mut params.combiner.c_inter);
    let (out, cache) = gine_gt_layer_cached(&inst.h, &inst.tuple, &params)?;
    let (_, d_out) = mse_loss(&out, &inst.h_target)?;
    let mut grads = params.zeros_like();
    let dh = gine_gt_backward(&inst.tuple, &params, &cache, &d_out, &mut grads)?;

    let mut probe = params.clone();
    let err_p = finite_difference_check(
        &mut |p| {
            probe.unpack(p)?;
            Ok(mse_loss(&gine_gt_layer(&inst.h, &inst.tuple, &probe)?, &inst.h_target)?.0)
        },
        &params.pack(),
        &grads.pack(),
        h_step,
    )?;
    let shape = inst.h.shape().to_vec();
    let err_h = finite_difference_check(
        &mut |p| {
            let hp = Tensor::new(shape.clone(), p.to_vec())?;
            Ok(mse_loss(&gine_gt_layer(&hp, &inst.tuple, &params)?, &inst.h_target)?.0)
        },
        inst.h.data(),
        dh.data(),
        h_step,
    )?;
    Ok(err_p.max(err_h))
}

fn egnn_gt_instance_err(
    rng: &mut ChaCha8Rng,
    inst: &Instance,
    edge_dim: usize,
    h_step: f64,
) -> Result<f64> {
    let mut params = EgnnGtParams::new(2, inst.d, edge_dim, rng);
    random_combiner(rng, &mut params.combiner.c_intra, &mut params.combiner.c_inter);
    let loss = |p: &EgnnGtParams, h: &Tensor, x: &Tensor| -> Result<f64> {
        let (ho, xo) = egnn_gt_layer(h, x, &inst.tuple, p)?;
        Ok(mse_loss(&ho, &inst.h_target)?.0 + mse_loss(&xo, &inst.x_target)?.0)
    };
    let ((h_out, x_out), cache) = egnn_gt_layer_cached(&inst.h, &inst.x, &inst.tuple, &params)?;
    let (_, d_h) = mse_loss(&h_out, &inst.h_target)?;
    let (_, d_x) = mse_loss(&x_out, &inst.x_target)?;
    let mut grads = params.zeros_like();
    let (dh, dx) = egnn_gt_backward(
        &inst.x,
        &inst.tuple,
        &params,
        &cache,
        &d_h,
        &d_x,
        &mut grads,
    )?;

    let mut probe = params.clone();
    let err_p = finite_difference_check(
        &mut |p| {
            probe.unpack(p)?;
            loss(&probe, &inst.h, &inst.x)
        },
        &params.pack(),
        &grads.pack(),
        h_step,
    )?;
    let h_shape = inst.h.shape().to_vec();
    let err_h = finite_difference_check(
        &mut |p| loss(&params, &Tensor::new(h_shape.clone(), p.to_vec())?, &inst.x),
        inst.h.data(),
        dh.data(),
        h_step,
    )?;
    let err_x = finite_difference_check(
        &mut |p| loss(&params, &inst.h, &Tensor::new(vec![inst.n, 3], p.to_vec())?),
        inst.x.data(),
        dx.data(),
        h_step,
    )?;
    Ok(err_p.max(err_h).max(err_x))
}

/// Worst-case deviations over the randomized equivariance suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub trials: usize,
    /// Trials whose orthogonal map had determinant -1 (reflections).
    pub reflection_trials: usize,
    /// Coordinate outputs under (Q, t) vs transformed outputs.
    pub max_e3_coord_err: f64,
    /// Feature outputs under (Q, t) vs untransformed features.
    pub max_e3_feat_err: f64,
    /// All four layers under node permutations.
    pub max_permutation_err: f64,
}

fn random_orthogonal(rng: &mut ChaCha8Rng, want_reflection: bool) -> [[f64; 3]; 3] {
    let a = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    let qr = a.qr();
    let mut q = qr.q();
    if (q.determinant() < 0.0) != want_reflection {
        for r in 0..3 {
            q[(r, 0)] = -q[(r, 0)];
        }
    }
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = q[(r, c)];
        }
    }
    out
}

fn apply_rigid(x: &Tensor, q: &[[f64; 3]; 3], t: &[f64; 3]) -> Tensor {
    let n = x.rows();
    let mut out = Tensor::zeros(&[n, 3]);
    for i in 0..n {
        for a in 0..3 {
            let mut v = t[a];
            for b in 0..3 {
                v += q[a][b] * x.at(i, b);
            }
            *out.at_mut(i, a) = v;
        }
    }
    out
}

fn permute_rows(t: &Tensor, perm: &[usize]) -> Tensor {
    let mut out = Tensor::zeros(t.shape());
    for (i, &pi) in perm.iter().enumerate() {
        out.row_mut(pi).copy_from_slice(t.row(i));
    }
    out
}

fn permute_graph(g: &Graph, perm: &[usize]) -> Graph {
    let edges: Vec<(usize, usize)> = g.edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
    Graph::new(g.n, edges, g.edge_weight.clone())
        .expect("permutation preserves validity")
        .with_features(g.edge_feat.clone())
        .expect("same edge count")
}

fn permute_tuple(t: &GraphTuple, perm: &[usize]) -> GraphTuple {
    GraphTuple::new(
        t.views.iter().map(|g| permute_graph(g, perm)).collect(),
        t.boundaries.clone(),
    )
    .expect("permutation preserves validity")
}

/// Runs `trials` random (rotation/reflection, translation, permutation)
/// probes over all layers.
pub fn equivariance_check(trials: usize, seed: u64) -> Result<EquivarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivarianceReport {
        trials,
        reflection_trials: 0,
        max_e3_coord_err: 0.0,
        max_e3_feat_err: 0.0,
        max_permutation_err: 0.0,
    };

    for trial in 0..trials {
        let edge_dim = rng.gen_range(0..=4usize);
        let inst = random_instance(&mut rng, edge_dim);
        let egcl_params = EgclParams::new(inst.d, edge_dim, &mut rng);
        let gine_params = GineParams::new(inst.d, edge_dim, &mut rng);
        let mut gine_gt_params = GineGtParams::new(2, inst.d, edge_dim, &mut rng);
        random_combiner(
            &mut rng,
            &mut gine_gt_params.combiner.c_intra,
            &mut gine_gt_params.combiner.c_inter,
        );
        let mut egnn_gt_params = EgnnGtParams::new(2, inst.d, edge_dim, &mut rng);
        random_combiner(
            &mut rng,
            &mut egnn_gt_params.combiner.c_intra,
            &mut egnn_gt_params.combiner.c_inter,
        );

        // E(3) action: rotate (half the trials reflect) and translate.
        let want_reflection = trial % 2 == 1;
        if want_reflection {
            report.reflection_trials += 1;
        }
        let q = random_orthogonal(&mut rng, want_reflection);
        let t = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let x_moved = apply_rigid(&inst.x, &q, &t);

        let g = &inst.tuple.views[0];
        let (h_a, x_a) = egcl(&inst.h, &inst.x, g, &egcl_params)?;
        let (h_b, x_b) = egcl(&inst.h, &x_moved, g, &egcl_params)?;
        report.max_e3_feat_err = report.max_e3_feat_err.max(h_b.max_abs_diff(&h_a));
        report.max_e3_coord_err = report
            .max_e3_coord_err
            .max(x_b.max_abs_diff(&apply_rigid(&x_a, &q, &t)));

        let (h_a, x_a) = egnn_gt_layer(&inst.h, &inst.x, &inst.tuple, &egnn_gt_params)?;
        let (h_b, x_b) = egnn_gt_layer(&inst.h, &x_moved, &inst.tuple, &egnn_gt_params)?;
        report.max_e3_feat_err = report.max_e3_feat_err.max(h_b.max_abs_diff(&h_a));
        report.max_e3_coord_err = report
            .max_e3_coord_err
            .max(x_b.max_abs_diff(&apply_rigid(&x_a, &q, &t)));

        // Permutation action on all four layers.
        let mut perm: Vec<usize> = (0..inst.n).collect();
        perm.shuffle(&mut rng);
        let h_p = permute_rows(&inst.h, &perm);
        let x_p = permute_rows(&inst.x, &perm);
        let g_p = permute_graph(g, &perm);
        let tuple_p = permute_tuple(&inst.tuple, &perm);

        let out = gine_conv(&inst.h, g, &gine_params)?;
        let out_p = gine_conv(&h_p, &g_p, &gine_params)?;
        report.max_permutation_err = report
            .max_permutation_err
            .max(out_p.max_abs_diff(&permute_rows(&out, &perm)));

        let (h_a, x_a) = egcl(&inst.h, &inst.x, g, &egcl_params)?;
        let (h_b, x_b) = egcl(&h_p, &x_p, &g_p, &egcl_params)?;
        report.max_permutation_err = report
            .max_permutation_err
            .max(h_b.max_abs_diff(&permute_rows(&h_a, &perm)))
            .max(x_b.max_abs_diff(&permute_rows(&x_a, &perm)));

        let out = gine_gt_layer(&inst.h, &inst.tuple, &gine_gt_params)?;
        let out_p = gine_gt_layer(&h_p, &tuple_p, &gine_gt_params)?;
        report.max_permutation_err = report
            .max_permutation_err
            .max(out_p.max_abs_diff(&permute_rows(&out, &perm)));

        let (h_a, x_a) = egnn_gt_layer(&inst.h, &inst.x, &inst.tuple, &egnn_gt_params)?;
        let (h_b, x_b) = egnn_gt_layer(&h_p, &x_p, &tuple_p, &egnn_gt_params)?;
        report.max_permutation_err = report
            .max_permutation_err
            .max(h_b.max_abs_diff(&permute_rows(&h_a, &perm)))
            .max(x_b.max_abs_diff(&permute_rows(&x_a, &perm)));
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gradient_checks_pass() {
        for kind in LayerKind::ALL {
            let err = layer_gradient_check(kind, 3, 11, 1e-6).unwrap();
            assert!(err < 1e-5, "{}: {err}", kind.name());
        }
    }

    #[test]
    fn small_equivariance_suite_passes() {
        let rep = equivariance_check(6, 3).unwrap();
        assert!(rep.reflection_trials >= 1);
        assert!(rep.max_e3_coord_err <= 1e-9, "{rep:?}");
        assert!(rep.max_e3_feat_err <= 1e-9, "{rep:?}");
        assert!(rep.max_permutation_err <= 1e-12, "{rep:?}");
    }

    #[test]
    fn layer_names_round_trip() {
        for kind in LayerKind::ALL {
            let parsed: LayerKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("resnet".parse::<LayerKind>().is_err());
    }
}
