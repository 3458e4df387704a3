//! Dataset records and synthetic generators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{coulomb_matrix, PointCloud};
use crate::tensor::Tensor;
use crate::theory::{oracle_risk_gap, validate_sigma, ShiftPair};

/// Number of regression targets per synthetic molecule.
pub const MOLECULE_TARGETS: usize = 14;
/// Number of regression targets per synthetic point cloud.
pub const CLOUD_TARGETS: usize = 2;
/// Minimum pairwise distance enforced by the molecule generator.
pub const MIN_ATOM_DIST: f64 = 0.8;
/// Allowed element charges for synthetic molecules (H, C, N, O, S).
pub const ATOM_CHARGES: [f64; 5] = [1.0, 6.0, 7.0, 8.0, 16.0];
/// Side length of the point-cloud sampling box.
pub const CLOUD_BOX: f64 = 5.0;

/// One dataset record. Molecules carry `charges` + `positions`, point
/// clouds carry `positions`, planted-filter records carry the input
/// signal `x`; all carry `targets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Sample {
    /// Structural checks shared by the loader and the generators;
    /// `line` feeds the loader's diagnostics (0 for in-memory data).
    pub fn validate(&self, line: usize) -> Result<()> {
        let schema = |msg: String| Error::Schema { line, msg };
        if self.targets.is_empty() {
            return Err(schema("field `targets` must be non-empty".into()));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(schema("field `targets` contains a non-finite value".into()));
        }
        if let (Some(c), Some(p)) = (&self.charges, &self.positions) {
            if c.len() != p.len() {
                return Err(schema(format!(
                    "{} charges but {} positions",
                    c.len(),
                    p.len()
                )));
            }
        }
        if let Some(p) = &self.positions {
            if p.iter().flatten().any(|v| !v.is_finite()) {
                return Err(schema("field `positions` contains a non-finite value".into()));
            }
        }
        if let Some(x) = &self.x {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(schema("field `x` contains a non-finite value".into()));
            }
        }
        if self.positions.is_none() && self.x.is_none() {
            return Err(schema("record needs either `positions` or `x`".into()));
        }
        Ok(())
    }

    /// Point-cloud view of a molecule or cloud record.
    pub fn point_cloud(&self) -> Result<PointCloud> {
        let pos = self
            .positions
            .as_ref()
            .ok_or_else(|| Error::Domain("sample has no positions".into()))?;
        let data: Vec<f64> = pos.iter().flatten().copied().collect();
        PointCloud::new(Tensor::new(vec![pos.len(), 3], data)?, self.charges.clone())
    }

    pub fn target_row(&self) -> Tensor {
        Tensor::new(vec![1, self.targets.len()], self.targets.clone()).expect("row shape")
    }
}

/// Eigenvalues of a symmetric matrix (ascending).
fn symmetric_eigenvalues(x: &Tensor) -> Vec<f64> {
    let n = x.rows();
    let m = DMatrix::from_row_slice(n, n, x.data());
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// The fixed spectral functionals used as molecule targets:
/// `t_j = mean_i tanh(lambda_i / 2^j)` over the Coulomb spectrum,
/// j = 0..13. Smooth in the positions and charges, so the regression
/// task is learnable by construction.
pub fn molecule_targets(coulomb: &Tensor) -> Vec<f64> {
    let ev = symmetric_eigenvalues(coulomb);
    let n = ev.len() as f64;
    (0..MOLECULE_TARGETS)
        .map(|j| {
            let s: f64 = ev.iter().map(|l| (l / f64::powi(2.0, j as i32)).tanh()).sum();
            s / n
        })
        .collect()
}

/// The fixed distance functionals used as point-cloud targets:
/// `tanh(mean_d / 2)` and `tanh(sqrt(var_d))` over all pairwise
/// distances.
pub fn cloud_targets(positions: &[[f64; 3]]) -> Vec<f64> {
    let n = positions.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = (0..3)
                .map(|a| (positions[i][a] - positions[j][a]).powi(2))
                .sum::<f64>()
                .sqrt();
            dists.push(d);
        }
    }
    let m = dists.len() as f64;
    let mean = dists.iter().sum::<f64>() / m;
    let var = dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / m;
    vec![(mean / 2.0).tanh(), var.sqrt().tanh()]
}

const POINT_ATTEMPTS: usize = 200;
const MOLECULE_RESTARTS: usize = 50;

/// Synthetic molecules: `count` samples with atom counts drawn from
/// `n_atoms`, charges from {1, 6, 7, 8, 16}, positions rejection-sampled
/// in a cube (side `2·n^(1/3)`) at minimum pairwise distance 0.8.
pub fn generate_synthetic_molecules(
    count: usize,
    n_atoms: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<Sample>> {
    if count == 0 {
        return Err(Error::Config("molecule count must be >= 1".into()));
    }
    if *n_atoms.start() < 2 {
        return Err(Error::Config("molecules need at least 2 atoms".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.gen_range(n_atoms.clone());
        let side = 2.0 * (n as f64).cbrt();
        let positions = sample_positions(&mut rng, n, side)?;
        let charges: Vec<f64> = (0..n)
            .map(|_| ATOM_CHARGES[rng.gen_range(0..ATOM_CHARGES.len())])
            .collect();
        let sample = Sample {
            charges: Some(charges),
            positions: Some(positions),
            x: None,
            targets: vec![],
        };
        let cm = coulomb_matrix(&sample.point_cloud()?)?;
        let targets = molecule_targets(&cm);
        out.push(Sample { targets, ..sample });
    }
    Ok(out)
}

/// Rejection-samples `n` points in `[0, side]^3` at minimum pairwise
/// distance [`MIN_ATOM_DIST`]; a molecule restarts after a point fails
/// 200 attempts, and generation aborts after 50 restarts.
fn sample_positions(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Result<Vec<[f64; 3]>> {
    'molecule: for _ in 0..MOLECULE_RESTARTS {
        let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
        while pts.len() < n {
            let mut placed = false;
            for _ in 0..POINT_ATTEMPTS {
                let cand = [
                    rng.gen_range(0.0..side),
                    rng.gen_range(0.0..side),
                    rng.gen_range(0.0..side),
                ];
                let ok = pts.iter().all(|p| {
                    let d2: f64 = (0..3).map(|a| (p[a] - cand[a]).powi(2)).sum();
                    d2 >= MIN_ATOM_DIST * MIN_ATOM_DIST
                });
                if ok {
                    pts.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'molecule;
            }
        }
        return Ok(pts);
    }
    Err(Error::Generation(format!(
        "could not place {n} atoms at min distance {MIN_ATOM_DIST} in a box of side {side:.3} \
         after {MOLECULE_RESTARTS} restarts"
    )))
}

/// Synthetic point clouds: `n_points` uniform points in `[0, 5]^3` with
/// two smooth distance-statistics targets.
pub fn generate_synthetic_clouds(count: usize, n_points: usize, seed: u64) -> Result<Vec<Sample>> {
    if count == 0 {
        return Err(Error::Config("cloud count must be >= 1".into()));
    }
    if n_points < 2 {
        return Err(Error::Config("clouds need at least 2 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let positions: Vec<[f64; 3]> = (0..n_points)
            .map(|_| {
                [
                    rng.gen_range(0.0..CLOUD_BOX),
                    rng.gen_range(0.0..CLOUD_BOX),
                    rng.gen_range(0.0..CLOUD_BOX),
                ]
            })
            .collect();
        let targets = cloud_targets(&positions);
        out.push(Sample {
            charges: None,
            positions: Some(positions),
            x: None,
            targets,
        });
    }
    Ok(out)
}

/// Ground truth of a planted-filter dataset: the shift pair, the oracle
/// filter's coefficients, and the analytic risk gap recorded at
/// generation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMeta {
    pub s: ShiftPair,
    pub sigma: Tensor,
    /// Coefficients of the polynomial part: `sum_k poly_coeffs[k] (S1+S2)^k`.
    pub poly_coeffs: Vec<f64>,
    /// Weight of the commutator term `alpha [S1, S2]`.
    pub alpha: f64,
    pub noise_var: f64,
    /// Filter degree m defining the competing classes.
    pub degree: usize,
    /// Oracle risk gap between the tied-coefficient dense class H0(m)
    /// and the graph-tuple class HGt(m), in the sum-over-coordinates
    /// squared-error convention.
    pub analytic_gap: f64,
    pub dist_h0_sq: f64,
    pub dist_hgt_sq: f64,
}

impl PlantedMeta {
    /// The planted operator `M* = sum_k c_k (S1+S2)^k + alpha [S1,S2]`.
    pub fn oracle_matrix(&self) -> Result<Tensor> {
        planted_matrix(&self.s, &self.poly_coeffs, self.alpha)
    }
}

fn planted_matrix(s: &ShiftPair, poly_coeffs: &[f64], alpha: f64) -> Result<Tensor> {
    let sum = s.sum();
    let mut m_star = Tensor::zeros(&[s.n(), s.n()]);
    let mut power = Tensor::eye(s.n());
    for (k, &c) in poly_coeffs.iter().enumerate() {
        if k > 0 {
            power = power.matmul(&sum)?;
        }
        m_star.axpy(c, &power)?;
    }
    m_star.axpy(alpha, &s.commutator())?;
    Ok(m_star)
}

/// Planted-filter dataset: inputs `x ~ N(0, Sigma)`, outputs
/// `y = M* x + eps` with per-coordinate noise variance `noise_var`.
/// Records the analytic oracle-risk gap of degree-`degree` classes
/// alongside the data.
#[allow(clippy::too_many_arguments)]
pub fn generate_planted_filter_dataset(
    s: &ShiftPair,
    poly_coeffs: &[f64],
    alpha: f64,
    sigma: &Tensor,
    noise_var: f64,
    degree: usize,
    count: usize,
    seed: u64,
) -> Result<(Vec<Sample>, PlantedMeta)> {
    if count == 0 {
        return Err(Error::Config("sample count must be >= 1".into()));
    }
    if poly_coeffs.is_empty() || poly_coeffs.len() > degree + 1 {
        return Err(Error::Config(format!(
            "need 1..={} polynomial coefficients for degree {degree}, got {}",
            degree + 1,
            poly_coeffs.len()
        )));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::Config(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let n = s.n();
    let chol = validate_sigma(sigma, n)?;
    let m_star = planted_matrix(s, poly_coeffs, alpha)?;
    let gap = oracle_risk_gap(&m_star, degree, s, sigma)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let x = chol.matvec(&z)?;
        let mut y = m_star.matvec(&x)?;
        for v in y.iter_mut() {
            let e: f64 = normal.sample(&mut rng);
            *v += noise_var.sqrt() * e;
        }
        samples.push(Sample {
            charges: None,
            positions: None,
            x: Some(x),
            targets: y,
        });
    }

    let meta = PlantedMeta {
        s: s.clone(),
        sigma: sigma.clone(),
        poly_coeffs: poly_coeffs.to_vec(),
        alpha,
        noise_var,
        degree,
        analytic_gap: gap.gap,
        dist_h0_sq: gap.dist_h0 * gap.dist_h0,
        dist_hgt_sq: gap.dist_hgt * gap.dist_hgt,
    };
    Ok((samples, meta))
}

/// Builds the matrix `sum_i coeffs[i] basis[i]`.
pub fn combine_matrices(basis: &[Tensor], coeffs: &[f64]) -> Result<Tensor> {
    if basis.is_empty() {
        return Err(Error::Domain("empty basis".into()));
    }
    if basis.len() != coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} basis matrices but {} coefficients",
            basis.len(),
            coeffs.len()
        )));
    }
    let mut out = Tensor::zeros(basis[0].shape());
    for (b, &c) in basis.iter().zip(coeffs) {
        out.axpy(c, b)?;
    }
    Ok(out)
}
