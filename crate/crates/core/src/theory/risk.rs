//! Oracle-risk decomposition and the exact risk gap between the
//! dense-graph and graph-tuple filter classes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::basis::{build_basis, combine, FilterClass};
use super::project::{sigma_norm, sigma_project, validate_sigma};
use super::words::ShiftPair;

/// How far outside `span(HGt)` the oracle predictor may sit (relative
/// to its own Σ-norm) before the risk-gap computation refuses to run.
pub const ORACLE_SPAN_TOL: f64 = 1e-6;

/// Result of the oracle-risk gap computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskGap {
    /// `dist_Σ(M*, H0)² - dist_Σ(M*, HGt)²`.
    pub gap: f64,
    /// `||Π_{V⊥} M*||²_{Σ,F}` for `V = span(H0)`, computed directly.
    pub perp_norm_sq: f64,
    pub dist_h0: f64,
    pub dist_h1: f64,
    pub dist_hgt: f64,
}

/// Computes the oracle-risk gap between the tied dense-graph class and
/// the graph-tuple class at degree `m`, together with the projection
/// norm it must equal. `m_star` must lie in `span(HGt(m))`.
pub fn oracle_risk_gap(
    m_star: &Tensor,
    m: usize,
    s: &ShiftPair,
    sigma: &Tensor,
) -> Result<RiskGap> {
    let hgt = build_basis(FilterClass::HGt, m, s, sigma)?;
    let (_, dist_hgt) = sigma_project(m_star, &hgt)?;
    let scale = sigma_norm(m_star, sigma)?.max(1.0);
    if dist_hgt > ORACLE_SPAN_TOL * scale {
        return Err(Error::Assumption(format!(
            "oracle predictor lies {dist_hgt:.3e} outside span(HGt({m})), beyond {:.1e} of its norm",
            ORACLE_SPAN_TOL
        )));
    }

    let h0 = build_basis(FilterClass::H0, m, s, sigma)?;
    let (c0, dist_h0) = sigma_project(m_star, &h0)?;
    let projected = combine(&h0, &c0)?;
    let perp = m_star.sub(&projected)?;
    let perp_norm = sigma_norm(&perp, sigma)?;

    let h1 = build_basis(FilterClass::H1, m, s, sigma)?;
    let (_, dist_h1) = sigma_project(m_star, &h1)?;

    Ok(RiskGap {
        gap: dist_h0 * dist_h0 - dist_hgt * dist_hgt,
        perp_norm_sq: perp_norm * perp_norm,
        dist_h0,
        dist_h1,
        dist_hgt,
    })
}

/// Monte Carlo check of the risk decomposition
/// `R(M) = n * noise_var + ||M - M*||²_{Σ,F}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalRisk {
    /// Mean of `||M x - y||²` over the sampled pairs.
    pub empirical: f64,
    /// `n * noise_var + ||M - M*||²_{Σ,F}`.
    pub analytic: f64,
    /// Standard error of the empirical mean.
    pub std_error: f64,
    pub n_samples: usize,
}

impl EmpiricalRisk {
    /// Deviation in units of the standard error (0 when SE is 0).
    pub fn deviation_in_se(&self) -> f64 {
        let diff = (self.empirical - self.analytic).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Draws `n_samples` pairs `x ~ N(0, Σ)`, `y = M* x + ε` with
/// `ε ~ N(0, noise_var I)`, and compares the empirical mean of
/// `||M x - y||²` against the analytic risk.
pub fn empirical_risk_check(
    m_hat: &Tensor,
    m_star: &Tensor,
    sigma: &Tensor,
    noise_var: f64,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<EmpiricalRisk> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if noise_var < 0.0 {
        return Err(Error::Domain("noise variance must be nonnegative".into()));
    }
    let n = m_star.rows();
    if m_star.shape() != [n, n] || m_hat.shape() != [n, n] {
        return Err(Error::Dimension(format!(
            "M {:?} and M* {:?} must be square of matching size",
            m_hat.shape(),
            m_star.shape()
        )));
    }
    let l = validate_sigma(sigma, n)?;
    let noise_sd = noise_var.sqrt();

    // Welford running mean/variance over per-sample squared errors.
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut z = vec![0.0f64; n];
    for t in 0..n_samples {
        for zi in &mut z {
            *zi = StandardNormal.sample(rng);
        }
        let x = l.matvec(&z)?;
        let pred = m_hat.matvec(&x)?;
        let truth = m_star.matvec(&x)?;
        let mut err = 0.0;
        for i in 0..n {
            let eps: f64 = if noise_sd > 0.0 {
                noise_sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            } else {
                0.0
            };
            let d = pred[i] - (truth[i] + eps);
            err += d * d;
        }
        let delta = err - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (err - mean);
    }
    let std_error = if n_samples > 1 {
        (m2 / (n_samples - 1) as f64 / n_samples as f64).sqrt()
    } else {
        0.0
    };

    let diff_norm = sigma_norm(&m_hat.sub(m_star)?, sigma)?;
    let analytic = n as f64 * noise_var + diff_norm * diff_norm;
    Ok(EmpiricalRisk {
        empirical: mean,
        analytic,
        std_error,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::sample::{random_pd_sigma, random_shift_pair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gap_zero_when_m_star_in_h0() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_shift_pair(4, false, &mut rng);
        let sigma = Tensor::eye(4);
        // M* = 2 I + 0.5 (S1+S2) - clearly in H0 span
        let m_star = Tensor::eye(4)
            .scale(2.0)
            .add(&s.sum().scale(0.5))
            .unwrap();
        let g = oracle_risk_gap(&m_star, 2, &s, &sigma).unwrap();
        assert!(g.gap.abs() <= 1e-10, "gap {}", g.gap);
        assert!(g.perp_norm_sq <= 1e-10);
    }

    #[test]
    fn gap_matches_perp_norm_with_commutator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let s = random_shift_pair(4, false, &mut rng);
            let sigma = random_pd_sigma(4, &mut rng);
            let alpha = 0.7;
            let m_star = s
                .sum()
                .scale(0.5)
                .add(&s.commutator().scale(alpha))
                .unwrap();
            let g = oracle_risk_gap(&m_star, 2, &s, &sigma).unwrap();
            assert!((g.gap - g.perp_norm_sq).abs() <= 1e-8, "{g:?}");
            assert!(g.gap > 0.0);
            assert!(g.dist_hgt <= g.dist_h0 + 1e-12);
            assert!(g.dist_hgt <= g.dist_h1 + 1e-12);
        }
    }

    #[test]
    fn gap_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_shift_pair(4, false, &mut rng);
        let sigma = Tensor::eye(4);
        let m_star = s.sum().add(&s.commutator().scale(0.3)).unwrap();
        let g1 = oracle_risk_gap(&m_star, 2, &s, &sigma).unwrap();
        let g3 = oracle_risk_gap(&m_star.scale(3.0), 2, &s, &sigma).unwrap();
        assert!((g3.gap - 9.0 * g1.gap).abs() <= 1e-8 * g3.gap.max(1.0));
    }

    #[test]
    fn out_of_span_oracle_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_shift_pair(4, false, &mut rng);
        let sigma = Tensor::eye(4);
        // a generic matrix will not lie in span(HGt(1)) = {I, S1, S2}
        let m_star = random_pd_sigma(4, &mut rng);
        assert!(matches!(
            oracle_risk_gap(&m_star, 1, &s, &sigma),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn noiseless_perfect_model_has_zero_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_shift_pair(3, false, &mut rng);
        let m_star = s.sum();
        let sigma = Tensor::eye(3);
        let r = empirical_risk_check(&m_star, &m_star, &sigma, 0.0, 100, &mut rng).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert_eq!(r.analytic, 0.0);
    }

    #[test]
    fn identity_offset_matches_trace() {
        // M - M* = I and Σ = I: analytic risk is n
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 4;
        let m_star = Tensor::zeros(&[n, n]);
        let m_hat = Tensor::eye(n);
        let sigma = Tensor::eye(n);
        let r = empirical_risk_check(&m_hat, &m_star, &sigma, 0.0, 50_000, &mut rng).unwrap();
        assert_eq!(r.analytic, n as f64);
        assert!(r.deviation_in_se() <= 4.0, "{r:?}");
    }

    #[test]
    fn noise_floor_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3;
        let m_star = Tensor::eye(n).scale(0.5);
        let sigma = random_pd_sigma(n, &mut rng);
        let r =
            empirical_risk_check(&m_star, &m_star, &sigma, 0.25, 50_000, &mut rng).unwrap();
        assert!((r.analytic - n as f64 * 0.25).abs() < 1e-12);
        assert!(r.deviation_in_se() <= 4.0, "{r:?}");
    }
}
