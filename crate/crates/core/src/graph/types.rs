use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A set of points with optional nuclear charges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCloud {
    positions: Tensor,
    charges: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(positions: Tensor, charges: Option<Vec<f64>>) -> Result<Self> {
        if positions.shape().len() != 2 || positions.cols() != 3 {
            return Err(Error::Dimension(format!(
                "positions must be [n × 3], got {:?}",
                positions.shape()
            )));
        }
        if positions.rows() == 0 {
            return Err(Error::Domain("point cloud needs at least one node".into()));
        }
        if !positions.is_finite() {
            return Err(Error::Numeric("non-finite position".into()));
        }
        if let Some(z) = &charges {
            if z.len() != positions.rows() {
                return Err(Error::Dimension(format!(
                    "{} charges for {} positions",
                    z.len(),
                    positions.rows()
                )));
            }
            if z.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Domain("charges must be positive and finite".into()));
            }
        }
        Ok(Self { positions, charges })
    }

    pub fn n(&self) -> usize {
        self.positions.rows()
    }

    pub fn positions(&self) -> &Tensor {
        &self.positions
    }

    pub fn charges(&self) -> Option<&[f64]> {
        self.charges.as_deref()
    }
}

/// Directed edge list over `n` nodes with a scalar weight per edge and an
/// optional `[|E| × d_e]` feature block.
///
/// The builders in this module always emit both directions of every pair
/// with equal weight; `Graph::new` itself only rejects self-loops and
/// out-of-range indices so tests can assemble arbitrary directed graphs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub edge_weight: Vec<f64>,
    pub edge_feat: Tensor,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, edge_weight: Vec<f64>) -> Result<Self> {
        if edge_weight.len() != edges.len() {
            return Err(Error::Dimension(format!(
                "{} edges but {} weights",
                edges.len(),
                edge_weight.len()
            )));
        }
        for &(i, j) in &edges {
            if i == j {
                return Err(Error::Domain(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::Domain(format!("edge ({i},{j}) outside 0..{n}")));
            }
        }
        let m = edges.len();
        Ok(Self {
            n,
            edges,
            edge_weight,
            edge_feat: Tensor::zeros(&[m, 0]),
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Attach per-edge features (`[|E| × d_e]`).
    pub fn with_features(mut self, feat: Tensor) -> Result<Self> {
        if feat.shape().len() != 2 || feat.rows() != self.edges.len() {
            return Err(Error::Dimension(format!(
                "features {:?} for {} edges",
                feat.shape(),
                self.edges.len()
            )));
        }
        self.edge_feat = feat;
        Ok(self)
    }

    pub fn feature_dim(&self) -> usize {
        self.edge_feat.cols()
    }

    /// Directed edge set, for partition checks.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().copied().collect()
    }

    /// True when every edge (i,j) has a mirror (j,i) with equal weight.
    pub fn is_symmetric(&self) -> bool {
        let mut weights = std::collections::BTreeMap::new();
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            weights.insert((i, j), self.edge_weight[e]);
        }
        self.edges.iter().enumerate().all(|(e, &(i, j))| {
            weights
                .get(&(j, i))
                .is_some_and(|w| *w == self.edge_weight[e])
        })
    }

    /// Number of edges leaving each node.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, _) in &self.edges {
            deg[i] += 1;
        }
        deg
    }

    /// Binary adjacency matrix (1.0 per directed edge).
    pub fn adjacency_matrix(&self) -> Tensor {
        let mut a = Tensor::zeros(&[self.n, self.n]);
        for &(i, j) in &self.edges {
            *a.at_mut(i, j) = 1.0;
        }
        a
    }
}

/// An ordered list of graphs over one node set with pairwise-disjoint
/// edge sets, plus the thresholds/radii that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphTuple {
    pub views: Vec<Graph>,
    pub boundaries: Vec<f64>,
}

impl GraphTuple {
    pub fn new(views: Vec<Graph>, boundaries: Vec<f64>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Config("a graph tuple needs at least one view".into()));
        }
        let n = views[0].n;
        if views.iter().any(|v| v.n != n) {
            return Err(Error::Config("views disagree on node count".into()));
        }
        Ok(Self { views, boundaries })
    }

    pub fn k(&self) -> usize {
        self.views.len()
    }

    pub fn n(&self) -> usize {
        self.views[0].n
    }

    /// Pairwise edge-set disjointness across views.
    pub fn views_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        for view in &self.views {
            for &e in &view.edges {
                if !seen.insert(e) {
                    return false;
                }
            }
        }
        true
    }

    /// Union of all view edge sets.
    pub fn union_edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.views
            .iter()
            .flat_map(|v| v.edges.iter().copied())
            .collect()
    }

    /// Union equals the complete off-diagonal edge set.
    pub fn union_is_complete(&self) -> bool {
        let n = self.n();
        self.union_edge_set().len() == n * (n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_rejects_self_loops_and_bad_indices() {
        assert!(Graph::new(3, vec![(0, 0)], vec![1.0]).is_err());
        assert!(Graph::new(3, vec![(0, 3)], vec![1.0]).is_err());
        assert!(Graph::new(3, vec![(0, 1)], vec![]).is_err());
    }

    #[test]
    fn symmetry_check() {
        let g = Graph::new(2, vec![(0, 1), (1, 0)], vec![2.0, 2.0]).unwrap();
        assert!(g.is_symmetric());
        let d = Graph::new(2, vec![(0, 1)], vec![2.0]).unwrap();
        assert!(!d.is_symmetric());
    }

    #[test]
    fn tuple_disjointness() {
        let a = Graph::new(3, vec![(0, 1), (1, 0)], vec![1.0, 1.0]).unwrap();
        let b = Graph::new(3, vec![(0, 2), (2, 0)], vec![1.0, 1.0]).unwrap();
        let t = GraphTuple::new(vec![a.clone(), b], vec![0.5]).unwrap();
        assert!(t.views_disjoint());
        let t2 = GraphTuple::new(vec![a.clone(), a], vec![0.5]).unwrap();
        assert!(!t2.views_disjoint());
    }
}
