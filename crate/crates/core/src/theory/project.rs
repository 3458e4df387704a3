//! Least-squares projection onto a filter span under the Σ-weighted
//! Frobenius inner product `<A, B>_Σ = tr(Bᵀ A Σ)`.
//!
//! With `Σ = L Lᵀ` the map `A -> A L` is an isometry from the weighted
//! geometry into the plain Frobenius one, so the projection reduces to
//! an ordinary least-squares problem on vectorized matrices, solved by
//! a rank-revealing SVD with singular values below `1e-10 * σ_max`
//! treated as zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::basis::{combine, FilterBasis};

/// Relative singular-value cutoff for rank decisions.
pub const SV_CUTOFF: f64 = 1e-10;

/// `<a, b>_Σ = tr(bᵀ a Σ)`.
pub fn sigma_inner(a: &Tensor, b: &Tensor, sigma: &Tensor) -> Result<f64> {
    let a_sigma = a.matmul(sigma)?;
    if b.shape() != a_sigma.shape() {
        return Err(Error::Dimension(format!(
            "inner product shapes {:?} vs {:?}",
            b.shape(),
            a_sigma.shape()
        )));
    }
    Ok(b.data()
        .iter()
        .zip(a_sigma.data())
        .map(|(x, y)| x * y)
        .sum())
}

/// `||a||_{Σ,F} = sqrt(<a, a>_Σ)`.
pub fn sigma_norm(a: &Tensor, sigma: &Tensor) -> Result<f64> {
    Ok(sigma_inner(a, a, sigma)?.max(0.0).sqrt())
}

fn to_dmatrix(t: &Tensor) -> DMatrix<f64> {
    DMatrix::from_row_iterator(t.rows(), t.cols(), t.data().iter().copied())
}

/// Checks Σ is square of size `n`, symmetric, and positive definite.
/// Returns its Cholesky factor `L` (so `Σ = L Lᵀ`).
pub fn validate_sigma(sigma: &Tensor, n: usize) -> Result<Tensor> {
    if sigma.shape() != [n, n] {
        return Err(Error::Dimension(format!(
            "Σ shape {:?}, expected [{n}, {n}]",
            sigma.shape()
        )));
    }
    let scale = sigma.frob_norm().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (sigma.at(i, j) - sigma.at(j, i)).abs() > 1e-12 * scale {
                return Err(Error::Domain("Σ must be symmetric".into()));
            }
        }
    }
    let chol = nalgebra::Cholesky::new(to_dmatrix(sigma))
        .ok_or_else(|| Error::Domain("Σ must be positive definite".into()))?;
    let l = chol.l();
    let mut out = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            *out.at_mut(i, j) = l[(i, j)];
        }
    }
    Ok(out)
}

/// Projects `m` onto `span(basis)` in the Σ-weighted geometry.
/// Returns the coefficients (one per basis element, rank-deficient
/// directions zeroed) and the residual `dist_Σ(m, span)`.
pub fn sigma_project(m: &Tensor, basis: &FilterBasis) -> Result<(Vec<f64>, f64)> {
    let n = basis.n();
    if m.shape() != [n, n] {
        return Err(Error::Dimension(format!(
            "target shape {:?}, expected [{n}, {n}]",
            m.shape()
        )));
    }
    let l = validate_sigma(&basis.sigma, n)?;
    let p = basis.matrices.len();

    // Column i is vec(B_i L); the target is vec(M L).
    let mut design = DMatrix::zeros(n * n, p);
    for (i, b) in basis.matrices.iter().enumerate() {
        let bl = b.matmul(&l)?;
        for (r, v) in bl.data().iter().enumerate() {
            design[(r, i)] = *v;
        }
    }
    let ml = m.matmul(&l)?;
    let rhs = DVector::from_iterator(n * n, ml.data().iter().copied());

    let svd = design.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let coeffs = if sigma_max <= 0.0 {
        vec![0.0; p]
    } else {
        let sol = svd
            .solve(&rhs, SV_CUTOFF * sigma_max)
            .map_err(|e| Error::Numeric(format!("SVD solve failed: {e}")))?;
        sol.iter().copied().collect()
    };

    let reconstruction = combine(basis, &coeffs)?;
    let residual = sigma_norm(&m.sub(&reconstruction)?, &basis.sigma)?;
    Ok((coeffs, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::basis::{build_basis, FilterClass};
    use crate::theory::words::ShiftPair;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ladder_pair() -> ShiftPair {
        ShiftPair::new(
            Tensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_sigma_inner_is_frobenius() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let eye = Tensor::eye(2);
        let f2: f64 = a.data().iter().map(|v| v * v).sum();
        assert!((sigma_inner(&a, &a, &eye).unwrap() - f2).abs() < 1e-12);
    }

    #[test]
    fn basis_element_projects_to_itself() {
        let s = ladder_pair();
        let basis = build_basis(FilterClass::HGt, 2, &s, &Tensor::eye(2)).unwrap();
        let target = basis.matrices[3].clone(); // S1 S1 = 0 here, pick nonzero
        let target = if target.frob_norm() == 0.0 {
            basis.matrices[1].clone()
        } else {
            target
        };
        let (_, residual) = sigma_project(&target, &basis).unwrap();
        assert!(residual <= 1e-10, "residual {residual}");
    }

    #[test]
    fn zero_target_gives_zero() {
        let s = ladder_pair();
        let basis = build_basis(FilterClass::H0, 2, &s, &Tensor::eye(2)).unwrap();
        let (coeffs, residual) = sigma_project(&Tensor::zeros(&[2, 2]), &basis).unwrap();
        assert!(residual <= 1e-12);
        assert!(coeffs.iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn commutator_off_h0_span() {
        let s = ladder_pair();
        let basis = build_basis(FilterClass::H0, 2, &s, &Tensor::eye(2)).unwrap();
        let (_, residual) = sigma_project(&s.commutator(), &basis).unwrap();
        assert!(residual > 1e-3, "residual {residual}");
    }

    #[test]
    fn rank_deficiency_handled() {
        // duplicated basis element: projection still exact
        let s = ladder_pair();
        let mut basis = build_basis(FilterClass::H0, 1, &s, &Tensor::eye(2)).unwrap();
        let dup = basis.matrices[1].clone();
        basis.matrices.push(dup);
        let target = s.sum().scale(3.0);
        let (_, residual) = sigma_project(&target, &basis).unwrap();
        assert!(residual <= 1e-10);
    }

    #[test]
    fn weighted_projection_reduces_weighted_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let a = Tensor::new(
            vec![n, n],
            (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let sigma = a
            .matmul(&a.transpose())
            .unwrap()
            .add(&Tensor::eye(n).scale(n as f64))
            .unwrap();
        let draw = |rng: &mut ChaCha8Rng| {
            Tensor::new(
                vec![n, n],
                (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap()
        };
        let s = ShiftPair::new(draw(&mut rng), draw(&mut rng)).unwrap();
        let basis = build_basis(FilterClass::HGt, 2, &s, &sigma).unwrap();
        let target = draw(&mut rng);
        let (coeffs, residual) = sigma_project(&target, &basis).unwrap();
        let recon = combine(&basis, &coeffs).unwrap();
        let direct = sigma_norm(&target.sub(&recon).unwrap(), &sigma).unwrap();
        assert!((direct - residual).abs() <= 1e-10);
        // optimality: perturbing any coefficient cannot shrink the residual
        for i in 0..coeffs.len() {
            for delta in [1e-3, -1e-3] {
                let mut c2 = coeffs.clone();
                c2[i] += delta;
                let r2 = sigma_norm(
                    &target.sub(&combine(&basis, &c2).unwrap()).unwrap(),
                    &sigma,
                )
                .unwrap();
                assert!(r2 + 1e-12 >= residual);
            }
        }
    }
}
