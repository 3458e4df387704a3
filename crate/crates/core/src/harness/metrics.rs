//! Evaluation metrics over stacked predictions.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check_pair(pred: &Tensor, target: &Tensor) -> Result<(usize, usize)> {
    if pred.shape() != target.shape() || pred.shape().len() != 2 {
        return Err(Error::Dimension(format!(
            "metric shapes {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.rows() == 0 {
        return Err(Error::Domain("metric over zero samples".into()));
    }
    Ok((pred.rows(), pred.cols()))
}

/// Per-target mean absolute error.
pub fn mae(pred: &Tensor, target: &Tensor) -> Result<Vec<f64>> {
    let (n, t) = check_pair(pred, target)?;
    let mut out = vec![0.0; t];
    for i in 0..n {
        for j in 0..t {
            out[j] += (pred.at(i, j) - target.at(i, j)).abs();
        }
    }
    for v in &mut out {
        *v /= n as f64;
    }
    Ok(out)
}

/// Per-target mean squared error.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<Vec<f64>> {
    let (n, t) = check_pair(pred, target)?;
    let mut out = vec![0.0; t];
    for i in 0..n {
        for j in 0..t {
            out[j] += (pred.at(i, j) - target.at(i, j)).powi(2);
        }
    }
    for v in &mut out {
        *v /= n as f64;
    }
    Ok(out)
}

/// Per-target coefficient of determination
/// `1 - sum_i (pred_i - y_i)^2 / sum_i (mean(y) - y_i)^2`.
pub fn r_squared(pred: &Tensor, target: &Tensor) -> Result<Vec<f64>> {
    let (n, t) = check_pair(pred, target)?;
    if n < 2 {
        return Err(Error::Domain(format!("R^2 needs >= 2 samples, got {n}")));
    }
    let mut out = vec![0.0; t];
    for j in 0..t {
        let mean: f64 = (0..n).map(|i| target.at(i, j)).sum::<f64>() / n as f64;
        let ss_tot: f64 = (0..n).map(|i| (target.at(i, j) - mean).powi(2)).sum();
        if ss_tot == 0.0 {
            return Err(Error::Domain(format!(
                "R^2 undefined: target column {j} is constant"
            )));
        }
        let ss_res: f64 = (0..n).map(|i| (target.at(i, j) - pred.at(i, j)).powi(2)).sum();
        out[j] = 1.0 - ss_res / ss_tot;
    }
    Ok(out)
}

/// Sample mean and standard error; the standard error is only defined
/// over two or more runs.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some((var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn perfect_prediction_gives_r2_one() {
        let y = t(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.0]]);
        let r2 = r_squared(&y, &y).unwrap();
        assert!(r2.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn mean_prediction_gives_r2_zero() {
        let y = t(&[vec![0.0], vec![2.0]]);
        let pred = t(&[vec![1.0], vec![1.0]]);
        let r2 = r_squared(&pred, &y).unwrap();
        assert!((r2[0]).abs() < 1e-15, "1 - 2/2 = 0, got {}", r2[0]);
    }

    #[test]
    fn constant_target_is_domain_error() {
        let y = t(&[vec![3.0], vec![3.0]]);
        let pred = t(&[vec![1.0], vec![2.0]]);
        assert!(matches!(r_squared(&pred, &y), Err(Error::Domain(_))));
        assert!(r_squared(&t(&[vec![1.0]]), &t(&[vec![1.0]])).is_err());
    }

    #[test]
    fn mae_mse_per_target() {
        let y = t(&[vec![0.0, 0.0], vec![0.0, 2.0]]);
        let p = t(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert_eq!(mae(&p, &y).unwrap(), vec![1.0, 1.0]);
        assert_eq!(mse(&p, &y).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn se_only_over_two_or_more() {
        assert_eq!(mean_and_se(&[5.0]), (5.0, None));
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se.unwrap() - 1.0).abs() < 1e-15);
    }
}
