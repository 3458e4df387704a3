//! L1 and MSE losses with gradients w.r.t. the prediction.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check(pred: &Tensor, target: &Tensor) -> Result<usize> {
    if pred.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "loss shapes {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Domain("loss over empty input".into()));
    }
    Ok(pred.len())
}

/// Mean absolute error and its subgradient (0 at zero residual).
pub fn l1_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    let n = check(pred, target)? as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for (i, (p, t)) in pred.data().iter().zip(target.data()).enumerate() {
        let r = p - t;
        loss += r.abs();
        grad.data_mut()[i] = if r > 0.0 {
            1.0 / n
        } else if r < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((loss / n, grad))
}

/// Mean squared error and its gradient.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    let n = check(pred, target)? as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for (i, (p, t)) in pred.data().iter().zip(target.data()).enumerate() {
        let r = p - t;
        loss += r * r;
        grad.data_mut()[i] = 2.0 * r / n;
    }
    Ok((loss / n, grad))
}
