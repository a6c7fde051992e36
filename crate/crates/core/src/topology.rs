//! Complete-graph bookkeeping over the swarm.
//!
//! Every unordered robot pair is an edge, stacked in lexicographic order
//! `(0,1), (0,2), ..., (N-2,N-1)`. Proximity gating is not done by deleting
//! edges: an edge whose endpoints are farther apart than `R` simply carries
//! zero force and zero damping weight.
//!
//! Indices in this module are 0-based.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

/// Edge bookkeeping for the complete graph on `n_robots` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwarmTopology {
    n_robots: usize,
    edges: Vec<(usize, usize)>,
}

impl SwarmTopology {
    pub fn new(n_robots: usize) -> Result<Self> {
        if n_robots < 2 {
            return Err(Error::InvalidTopology(n_robots));
        }
        let mut edges = Vec::with_capacity(n_robots * (n_robots - 1) / 2);
        for i in 0..n_robots {
            for j in (i + 1)..n_robots {
                edges.push((i, j));
            }
        }
        Ok(Self { n_robots, edges })
    }

    pub fn n_robots(&self) -> usize {
        self.n_robots
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Robot pairs `(i, j)` with `i < j`, in stacking order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }

    /// Position of the pair `(i, j)` in the edge stack.
    pub fn edge_index(&self, i: usize, j: usize) -> Result<usize> {
        edge_index(i, j, self.n_robots)
    }

    /// Edges touching robot `i`, in stacking order.
    pub fn incident_edges(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_robots).filter(move |&j| j != i).map(move |j| {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            edge_index_unchecked(a, b, self.n_robots)
        })
    }

    /// Node-by-edge incidence matrix: column `k` for edge `(i, j)` holds `+1`
    /// at row `i` and `-1` at row `j`.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_robots, self.n_edges());
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            m[(i, k)] = 1.0;
            m[(j, k)] = -1.0;
        }
        m
    }

    /// `I_G diag(w) I_Gᵀ`, assembled edge by edge.
    pub fn weighted_laplacian(&self, weights: &[f64]) -> Result<DMatrix<f64>> {
        if weights.len() != self.n_edges() {
            return Err(Error::DimensionMismatch {
                what: "edge weights",
                expected: self.n_edges(),
                got: weights.len(),
            });
        }
        let mut l = DMatrix::zeros(self.n_robots, self.n_robots);
        for (k, (&(i, j), &w)) in self.edges.iter().zip(weights).enumerate() {
            if !(w >= 0.0) {
                return Err(Error::InvalidWeight { edge: k, weight: w });
            }
            l[(i, i)] += w;
            l[(j, j)] += w;
            l[(i, j)] -= w;
            l[(j, i)] -= w;
        }
        Ok(l)
    }
}

/// Lexicographic position of the pair `(i, j)`, `i < j < n`.
pub fn edge_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i >= j || j >= n {
        return Err(Error::InvalidPair { i, j, n });
    }
    Ok(edge_index_unchecked(i, j, n))
}

#[inline]
pub(crate) fn edge_index_unchecked(i: usize, j: usize, n: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// The proximity neighborhood of one robot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub robot_id: usize,
    pub neighbor_ids: Vec<usize>,
}

/// Closed-ball neighborhoods: `j` neighbors `i` iff `j != i` and
/// `|x_i - x_j| <= range`.
pub fn neighborhoods(positions: &[Vector3<f64>], range: f64) -> Vec<Neighborhood> {
    let n = positions.len();
    let mut out: Vec<Neighborhood> = (0..n)
        .map(|i| Neighborhood {
            robot_id: i,
            neighbor_ids: Vec::new(),
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (positions[i] - positions[j]).norm() <= range {
                out[i].neighbor_ids.push(j);
                out[j].neighbor_ids.push(i);
            }
        }
    }
    for nb in &mut out {
        nb.neighbor_ids.sort_unstable();
    }
    out
}
