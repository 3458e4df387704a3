//! Filter-class bases: strong-connection (H1), dense-graph (H0), and
//! graph-tuple (HGt) polynomial filters of degree at most `m`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::project::validate_sigma;
use super::words::{enumerate_words, word_matrix, words_of_length, ShiftPair};

/// Which span the basis generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterClass {
    /// Powers of the strong-view operator: `{S1^k, k <= m}`.
    H1,
    /// Powers of the summed operator: `{(S1+S2)^k, k <= m}`.
    H0,
    /// All words in the pair: `{w(S1,S2), |w| <= m}`.
    HGt,
}

impl fmt::Display for FilterClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterClass::H1 => write!(f, "H1"),
            FilterClass::H0 => write!(f, "H0"),
            FilterClass::HGt => write!(f, "HGt"),
        }
    }
}

/// An ordered generating set together with the inner-product weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBasis {
    pub class: FilterClass,
    pub matrices: Vec<Tensor>,
    pub sigma: Tensor,
}

impl FilterBasis {
    pub fn n(&self) -> usize {
        self.sigma.rows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

fn powers(base: &Tensor, m: usize) -> Vec<Tensor> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(Tensor::eye(base.rows()));
    for k in 1..=m {
        let next = out[k - 1].matmul(base).expect("square");
        out.push(next);
    }
    out
}

/// Builds the generating set for `class` at degree `m`. H1 and H0 have
/// `m+1` elements; HGt has `2^(m+1) - 1` (one per word).
pub fn build_basis(
    class: FilterClass,
    m: usize,
    s: &ShiftPair,
    sigma: &Tensor,
) -> Result<FilterBasis> {
    validate_sigma(sigma, s.n())?;
    let matrices = match class {
        FilterClass::H1 => powers(&s.s1, m),
        FilterClass::H0 => powers(&s.sum(), m),
        FilterClass::HGt => enumerate_words(m)
            .iter()
            .map(|w| word_matrix(w, s))
            .collect(),
    };
    Ok(FilterBasis {
        class,
        matrices,
        sigma: sigma.clone(),
    })
}

/// Linear combination `sum_i coeffs[i] * matrices[i]`.
pub fn combine(basis: &FilterBasis, coeffs: &[f64]) -> Result<Tensor> {
    if coeffs.len() != basis.matrices.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} basis elements",
            coeffs.len(),
            basis.matrices.len()
        )));
    }
    let n = basis.n();
    let mut out = Tensor::zeros(&[n, n]);
    for (c, mat) in coeffs.iter().zip(&basis.matrices) {
        out.axpy(*c, mat)?;
    }
    Ok(out)
}

/// Noncommutative binomial check: for every `k <= m`, the expansion
/// `(S1+S2)^k = sum_{|w|=k} w(S1,S2)` holds as an algebraic identity.
/// Returns the largest Frobenius residual over `k`.
pub fn check_nc_binomial(m: usize, s: &ShiftPair) -> f64 {
    let sum_powers = powers(&s.sum(), m);
    let mut worst = 0.0f64;
    for (k, lhs) in sum_powers.iter().enumerate() {
        let n = s.n();
        let mut rhs = Tensor::zeros(&[n, n]);
        for w in words_of_length(k) {
            rhs.axpy(1.0, &word_matrix(&w, s)).expect("same shape");
        }
        let residual = lhs.sub(&rhs).expect("same shape").frob_norm();
        worst = worst.max(residual);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ladder_pair() -> ShiftPair {
        ShiftPair::new(
            Tensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> ShiftPair {
        let draw = |rng: &mut ChaCha8Rng| {
            Tensor::new(
                vec![n, n],
                (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap()
        };
        ShiftPair::new(draw(rng), draw(rng)).unwrap()
    }

    #[test]
    fn h1_basis_is_identity_and_s1() {
        let s = ladder_pair();
        let b = build_basis(FilterClass::H1, 1, &s, &Tensor::eye(2)).unwrap();
        assert_eq!(b.matrices.len(), 2);
        assert_eq!(b.matrices[0], Tensor::eye(2));
        assert_eq!(b.matrices[1], s.s1);
    }

    #[test]
    fn h0_basis_m2() {
        let s = ladder_pair();
        let b = build_basis(FilterClass::H0, 2, &s, &Tensor::eye(2)).unwrap();
        assert_eq!(b.matrices.len(), 3);
        let sum = s.sum();
        assert_eq!(b.matrices[1], sum);
        assert_eq!(b.matrices[2], sum.matmul(&sum).unwrap());
    }

    #[test]
    fn hgt_basis_m2_has_seven() {
        let s = ladder_pair();
        let b = build_basis(FilterClass::HGt, 2, &s, &Tensor::eye(2)).unwrap();
        assert_eq!(b.matrices.len(), 7);
    }

    #[test]
    fn non_pd_sigma_rejected() {
        let s = ladder_pair();
        let sigma = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(
            build_basis(FilterClass::H0, 1, &s, &sigma),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn binomial_identity_holds_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let s = random_pair(&mut rng, n);
            let m = rng.gen_range(0..=4);
            assert!(check_nc_binomial(m, &s) <= 1e-10);
        }
    }

    #[test]
    fn binomial_identity_holds_for_commuting_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s1 = Tensor::new(
            vec![3, 3],
            (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let s = ShiftPair::new(s1.clone(), s1.scale(2.0)).unwrap();
        assert!(s.commutator_fro() < 1e-12);
        assert!(check_nc_binomial(3, &s) <= 1e-10);
    }
}
