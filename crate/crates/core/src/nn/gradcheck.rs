//! Central finite-difference gradient oracle.

use crate::error::{Error, Result};

/// Compare analytic gradients against central finite differences.
///
/// For each parameter i, evaluates `(f(θ+h e_i) - f(θ-h e_i)) / 2h` and
/// returns the max over i of `|fd - analytic| / max(1, |analytic|)`.
pub fn finite_difference_check(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    analytic: &[f64],
    h: f64,
) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Domain("finite-difference step must be > 0".into()));
    }
    if theta.len() != analytic.len() {
        return Err(Error::Dimension(format!(
            "{} parameters vs {} analytic gradients",
            theta.len(),
            analytic.len()
        )));
    }
    let mut work = theta.to_vec();
    let mut max_rel = 0.0f64;
    for i in 0..theta.len() {
        work[i] = theta[i] + h;
        let up = f(&work)?;
        work[i] = theta[i] - h;
        let down = f(&work)?;
        work[i] = theta[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite function value at parameter {i}"
            )));
        }
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - analytic[i]).abs() / analytic[i].abs().max(1.0);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        // f(θ) = θ² at θ=3: both analytic and FD give 6.
        let err = finite_difference_check(
            &mut |p: &[f64]| Ok(p[0] * p[0]),
            &[3.0],
            &[6.0],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-8, "rel err {err}");
    }

    #[test]
    fn constant_function_gives_zero() {
        let err =
            finite_difference_check(&mut |_: &[f64]| Ok(4.2), &[1.0, 2.0], &[0.0, 0.0], 1e-6)
                .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(finite_difference_check(&mut |_| Ok(0.0), &[1.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let res = finite_difference_check(
            &mut |p: &[f64]| Ok(1.0 / (p[0] - p[0])),
            &[1.0],
            &[0.0],
            1e-6,
        );
        assert!(matches!(res, Err(Error::Numeric(_))));
    }
}
