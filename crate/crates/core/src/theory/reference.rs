//! Independent projection oracle.
//!
//! Solves the same Σ-weighted least-squares problem as
//! [`sigma_project`](super::project::sigma_project) by an unrelated
//! route: assemble the Gram matrix of the basis under `<.,.>_Σ` via the
//! trace formula (no factorization of Σ), then apply a pseudo-inverse
//! built from a hand-rolled cyclic Jacobi eigendecomposition. Used to
//! cross-check the SVD path; the two implementations share no linear
//! algebra.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::basis::{combine, FilterBasis};
use super::project::{sigma_inner, sigma_norm};

/// Relative eigenvalue cutoff for the pseudo-inverse.
const EIG_CUTOFF: f64 = 1e-12;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// `(eigenvalues, eigenvectors)` with eigenvectors as columns, so
/// `A = V diag(λ) Vᵀ`.
fn jacobi_eigen(a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let norm: f64 = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Ok(((0..p).map(|i| m[i][i]).collect(), v));
    }

    let tol = 1e-14 * norm;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off += 2.0 * m[i][j] * m[i][j];
            }
        }
        if off.sqrt() <= tol {
            let vals = (0..p).map(|i| m[i][i]).collect();
            return Ok((vals, v));
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let apq = m[i][j];
                if apq.abs() <= tol / (p * p) as f64 {
                    continue;
                }
                let tau = (m[j][j] - m[i][i]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rotate rows/columns i and j of m
                for k in 0..p {
                    let mik = m[i][k];
                    let mjk = m[j][k];
                    m[i][k] = c * mik - s * mjk;
                    m[j][k] = s * mik + c * mjk;
                }
                for k in 0..p {
                    let mki = m[k][i];
                    let mkj = m[k][j];
                    m[k][i] = c * mki - s * mkj;
                    m[k][j] = s * mki + c * mkj;
                }
                for k in 0..p {
                    let vki = v[k][i];
                    let vkj = v[k][j];
                    v[k][i] = c * vki - s * vkj;
                    v[k][j] = s * vki + c * vkj;
                }
            }
        }
    }
    Err(Error::Numeric(
        "Jacobi eigendecomposition did not converge".into(),
    ))
}

/// Projects `m` onto `span(basis)` via the normal equations and a
/// spectral pseudo-inverse of the Gram matrix. Returns `(coefficients,
/// residual)` with the same meaning as `sigma_project`.
pub fn gram_project(m: &Tensor, basis: &FilterBasis) -> Result<(Vec<f64>, f64)> {
    let n = basis.n();
    if m.shape() != [n, n] {
        return Err(Error::Dimension(format!(
            "target shape {:?}, expected [{n}, {n}]",
            m.shape()
        )));
    }
    let p = basis.matrices.len();
    let sigma = &basis.sigma;

    let mut gram = vec![vec![0.0f64; p]; p];
    let mut rhs = vec![0.0f64; p];
    for i in 0..p {
        for j in 0..=i {
            let g = sigma_inner(&basis.matrices[i], &basis.matrices[j], sigma)?;
            gram[i][j] = g;
            gram[j][i] = g;
        }
        rhs[i] = sigma_inner(m, &basis.matrices[i], sigma)?;
    }

    let (vals, vecs) = jacobi_eigen(&gram)?;
    let lambda_max = vals.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));

    // c = V diag(1/λ) Vᵀ rhs with small eigenvalues dropped
    let mut coeffs = vec![0.0f64; p];
    if lambda_max > 0.0 {
        for e in 0..p {
            if vals[e].abs() <= EIG_CUTOFF * lambda_max {
                continue;
            }
            let mut proj = 0.0;
            for i in 0..p {
                proj += vecs[i][e] * rhs[i];
            }
            let scale = proj / vals[e];
            for (i, c) in coeffs.iter_mut().enumerate() {
                *c += vecs[i][e] * scale;
            }
        }
    }

    let reconstruction = combine(basis, &coeffs)?;
    let residual = sigma_norm(&m.sub(&reconstruction)?, sigma)?;
    Ok((coeffs, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::basis::{build_basis, FilterClass};
    use crate::theory::project::sigma_project;
    use crate::theory::words::ShiftPair;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // diag(3, 1) rotated by 45 degrees
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (mut vals, _) = jacobi_eigen(&a).unwrap();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = 6;
        let mut a = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..=i {
                let x = rng.gen_range(-1.0..1.0);
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        let (vals, vecs) = jacobi_eigen(&a).unwrap();
        for i in 0..p {
            for j in 0..p {
                let mut rec = 0.0;
                for e in 0..p {
                    rec += vecs[i][e] * vals[e] * vecs[j][e];
                }
                assert!((rec - a[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn agrees_with_svd_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..25 {
            let n = 4;
            let draw = |rng: &mut ChaCha8Rng| {
                Tensor::new(
                    vec![n, n],
                    (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
                .unwrap()
            };
            let s = ShiftPair::new(draw(&mut rng), draw(&mut rng)).unwrap();
            let sigma = if trial % 2 == 0 {
                Tensor::eye(n)
            } else {
                let a = draw(&mut rng);
                a.matmul(&a.transpose())
                    .unwrap()
                    .add(&Tensor::eye(n).scale(n as f64))
                    .unwrap()
            };
            let basis = build_basis(FilterClass::H0, 2, &s, &sigma).unwrap();
            let target = s.commutator();
            let (_, r_svd) = sigma_project(&target, &basis).unwrap();
            let (_, r_gram) = gram_project(&target, &basis).unwrap();
            assert!(
                (r_svd - r_gram).abs() <= 1e-8,
                "trial {trial}: {r_svd} vs {r_gram}"
            );
        }
    }
}
