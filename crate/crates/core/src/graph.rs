//! Weighted undirected graphs and their Laplacian and degree matrices.
//!
//! Vertex ids are 0-based and contiguous. A graph is validated once at
//! construction, so every assembly routine downstream is infallible.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge `(i, j)` carrying a strictly positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl Edge {
    /// The endpoint opposite `v`, if `v` is an endpoint.
    pub fn other(&self, v: usize) -> Option<usize> {
        if self.i == v {
            Some(self.j)
        } else if self.j == v {
            Some(self.i)
        } else {
            None
        }
    }
}

/// A simple weighted undirected graph `G = (V, E, w)`.
///
/// Invariants: no self-loops, at most one edge per unordered pair, all
/// weights finite and positive, all endpoints in `[0, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (id, (i, j, w)) in edges.into_iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} ({i}, {j}) references a vertex outside [0, {n})"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} is a self-loop at {i}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} ({i}, {j}) has non-positive or non-finite weight {w}"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        Ok(Self { n, edges: out })
    }

    /// Recovers the graph whose Laplacian is `lap`; off-diagonal entries
    /// below `-0.0` become edges with weight `-a_ij`.
    pub fn from_laplacian(lap: &LaplacianMatrix) -> Result<Self> {
        let m = lap.matrix();
        let n = m.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = m[(i, j)];
                if a > 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "positive off-diagonal entry {a} at ({i}, {j})"
                    )));
                }
                if a < 0.0 {
                    edges.push((i, j, -a));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of all edge weights, `w_total(G)`.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Weighted degrees `delta_i = sum of w_e over edges at i`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.i] += e.w;
            deg[e.j] += e.w;
        }
        deg
    }

    /// Incident edges of `v` as `(edge id, neighbour, weight)`, in edge-id order.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter_map(move |(id, e)| e.other(v).map(|u| (id, u, e.w)))
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        adj
    }

    /// Dense adjacency matrix with entries `w_ij`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }
}

/// A dense graph Laplacian `A` with `<Au, v> = sum w_e (u_i - u_j)(v_i - v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.0.diagonal().iter().cloned().fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }

    /// `u^T A u`.
    pub fn quadratic_form(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.0 * u))
    }
}

/// The diagonal degree matrix `D = diag(delta_1, ..., delta_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMatrix {
    diagonal: DVector<f64>,
}

impl DegreeMatrix {
    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diagonal)
    }

    /// `<D u, v>`.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.iter()
            .zip(v.iter())
            .zip(self.diagonal.iter())
            .map(|((a, b), d)| a * b * d)
            .sum()
    }
}

pub fn build_laplacian(g: &WeightedGraph) -> LaplacianMatrix {
    let mut a = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        a[(e.i, e.i)] += e.w;
        a[(e.j, e.j)] += e.w;
        a[(e.i, e.j)] -= e.w;
        a[(e.j, e.i)] -= e.w;
    }
    LaplacianMatrix(a)
}

pub fn build_degree_matrix(g: &WeightedGraph) -> DegreeMatrix {
    DegreeMatrix {
        diagonal: DVector::from_vec(g.degrees()),
    }
}

/// Breadth-first search from vertex 0. The empty graph counts as connected.
pub fn is_connected(g: &WeightedGraph) -> bool {
    if g.n <= 1 {
        return true;
    }
    let adj = g.adjacency_lists();
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    count == g.n
}

/// `<Mv, v> / <v, v>`.
pub fn rayleigh_quotient(m: &LaplacianMatrix, v: &DVector<f64>) -> Result<f64> {
    if v.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: v.len(),
        });
    }
    let vv = v.norm_squared();
    if vv == 0.0 {
        return Err(Error::Domain("Rayleigh quotient of the zero vector".into()));
    }
    Ok(m.quadratic_form(v) / vv)
}
