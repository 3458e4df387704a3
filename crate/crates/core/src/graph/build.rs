//! Interaction matrices and their thresholded / radius-partitioned views.
//!
//! Boundary ties always go to the stronger view: `X_ij >= tau` lands in
//! the strong-connection graph, `d <= c1` in the inner radius view.

use crate::error::{Error, Result};
use crate::graph::types::{Graph, GraphTuple, PointCloud};
use crate::tensor::Tensor;

/// Dense Coulomb matrix: `X_ii = 0.5 Z_i^2.4`, `X_ij = Z_i Z_j / ||R_i - R_j||`.
pub fn coulomb_matrix(cloud: &PointCloud) -> Result<Tensor> {
    let z = cloud
        .charges()
        .ok_or_else(|| Error::Domain("coulomb matrix needs nuclear charges".into()))?;
    let n = cloud.n();
    let pos = cloud.positions();
    let mut x = Tensor::zeros(&[n, n]);
    for i in 0..n {
        *x.at_mut(i, i) = 0.5 * z[i].powf(2.4);
        for j in (i + 1)..n {
            let d = pair_distance(pos, i, j);
            if d == 0.0 {
                return Err(Error::Singularity(format!("atoms {i} and {j} coincide")));
            }
            let v = z[i] * z[j] / d;
            *x.at_mut(i, j) = v;
            *x.at_mut(j, i) = v;
        }
    }
    Ok(x)
}

fn pair_distance(pos: &Tensor, i: usize, j: usize) -> f64 {
    let (a, b) = (pos.row(i), pos.row(j));
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn square_check(x: &Tensor) -> Result<usize> {
    if x.shape().len() != 2 || x.rows() != x.cols() {
        return Err(Error::Dimension(format!(
            "interaction matrix must be square, got {:?}",
            x.shape()
        )));
    }
    Ok(x.rows())
}

/// Single-graph baseline: keeps off-diagonal pairs with `X_ij >= c`,
/// edge weight `X_ij`. Diagonal entries never produce edges.
pub fn threshold_graph(x: &Tensor, c: f64) -> Result<Graph> {
    let n = square_check(x)?;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && x.at(i, j) >= c {
                edges.push((i, j));
                weights.push(x.at(i, j));
            }
        }
    }
    Graph::new(n, edges, weights)
}

/// Two-view partition of the complete off-diagonal edge set: view 1 keeps
/// `X_ij >= tau`, view 2 keeps everything else.
pub fn partition_by_threshold(x: &Tensor, tau: f64) -> Result<GraphTuple> {
    let n = square_check(x)?;
    let mut strong = (Vec::new(), Vec::new());
    let mut weak = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = x.at(i, j);
            let side = if v >= tau { &mut strong } else { &mut weak };
            side.0.push((i, j));
            side.1.push(v);
        }
    }
    GraphTuple::new(
        vec![
            Graph::new(n, strong.0, strong.1)?,
            Graph::new(n, weak.0, weak.1)?,
        ],
        vec![tau],
    )
}

/// Connects pairs with `0 < d_ij <= r`; edge weight is the distance.
pub fn radius_graph(positions: &Tensor, r: f64) -> Result<Graph> {
    if positions.shape().len() != 2 || positions.cols() != 3 {
        return Err(Error::Dimension(format!(
            "positions must be [n × 3], got {:?}",
            positions.shape()
        )));
    }
    if r <= 0.0 {
        return Err(Error::Config("radius must be > 0".into()));
    }
    let n = positions.rows();
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = pair_distance(positions, i, j);
            if d > 0.0 && d <= r {
                edges.push((i, j));
                weights.push(d);
            }
        }
    }
    Graph::new(n, edges, weights)
}

/// Two radius views: view 1 has `d <= c1`, view 2 has `c1 < d <= c2`.
/// Pairs beyond `c2` (and coincident pairs) belong to no view.
pub fn partition_by_radii(positions: &Tensor, c1: f64, c2: f64) -> Result<GraphTuple> {
    if !(c2 > c1 && c1 > 0.0) {
        return Err(Error::Config(format!("need c2 > c1 > 0, got c1={c1}, c2={c2}")));
    }
    if positions.shape().len() != 2 || positions.cols() != 3 {
        return Err(Error::Dimension(format!(
            "positions must be [n × 3], got {:?}",
            positions.shape()
        )));
    }
    let n = positions.rows();
    let mut inner = (Vec::new(), Vec::new());
    let mut outer = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = pair_distance(positions, i, j);
            if d == 0.0 || d > c2 {
                continue;
            }
            let side = if d <= c1 { &mut inner } else { &mut outer };
            side.0.push((i, j));
            side.1.push(d);
        }
    }
    GraphTuple::new(
        vec![
            Graph::new(n, inner.0, inner.1)?,
            Graph::new(n, outer.0, outer.1)?,
        ],
        vec![c1, c2],
    )
}
