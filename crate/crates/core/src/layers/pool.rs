//! Graph-level readout.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean over nodes: `[n x d] -> [d]`.
pub fn global_mean_pool(h: &Tensor) -> Result<Tensor> {
    if h.shape().len() != 2 {
        return Err(Error::Dimension(format!(
            "expected [n, d] node features, got {:?}",
            h.shape()
        )));
    }
    let n = h.rows();
    if n == 0 {
        return Err(Error::Domain("mean pool over an empty graph".into()));
    }
    let d = h.cols();
    let mut out = vec![0.0; d];
    for i in 0..n {
        let row = h.row(i);
        for c in 0..d {
            out[c] += row[c];
        }
    }
    let inv = 1.0 / n as f64;
    for v in &mut out {
        *v *= inv;
    }
    Ok(Tensor::vector(out))
}

/// Gradient of the mean pool: spreads `upstream/n` to every node row.
pub fn global_mean_pool_backward(n: usize, upstream: &Tensor) -> Result<Tensor> {
    if upstream.shape().len() != 1 {
        return Err(Error::Dimension(format!(
            "expected [d] pooled gradient, got {:?}",
            upstream.shape()
        )));
    }
    if n == 0 {
        return Err(Error::Domain("mean pool over an empty graph".into()));
    }
    let d = upstream.len();
    let inv = 1.0 / n as f64;
    let mut out = Tensor::zeros(&[n, d]);
    for i in 0..n {
        let row = out.row_mut(i);
        for c in 0..d {
            row[c] = upstream.data()[c] * inv;
        }
    }
    Ok(out)
}
