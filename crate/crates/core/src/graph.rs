//! Oriented graphs and their incidence / Laplacian matrices.
//!
//! Nodes are indexed from 0 internally; [`OrientedGraph::from_one_based`]
//! accepts the 1-based edge lists used in problem files. Each edge `(i, j)`
//! has source `i` and sink `j`; column `e` of the incidence matrix is
//! `+1` at the source and `−1` at the sink.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

/// Built-in topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Line,
    Ring,
    Complete,
    Star,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" | "path" => Ok(GraphKind::Line),
            "ring" | "cycle" => Ok(GraphKind::Ring),
            "complete" => Ok(GraphKind::Complete),
            "star" => Ok(GraphKind::Star),
            other => Err(Error::Graph(format!(
                "unknown graph kind `{other}` (expected line, ring, complete or star)"
            ))),
        }
    }
}

impl OrientedGraph {
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::new();
        for &(i, j) in &edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::Graph(format!(
                    "edge ({}, {}) references a node outside 1..={n_nodes}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop at node {}", i + 1)));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Graph(format!("duplicate edge between {} and {}", i + 1, j + 1)));
            }
        }
        Ok(Self { n_nodes, edges })
    }

    /// Edges given with 1-based node labels.
    pub fn from_one_based(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == 0 || j == 0 {
                return Err(Error::Graph("node labels are 1-based".into()));
            }
            zero_based.push((i - 1, j - 1));
        }
        Self::new(n_nodes, zero_based)
    }

    pub fn generate(kind: GraphKind, n: usize) -> Result<Self> {
        match kind {
            GraphKind::Line => Self::line(n),
            GraphKind::Ring => Self::ring(n),
            GraphKind::Complete => Self::complete(n),
            GraphKind::Star => Self::star(n),
        }
    }

    /// Path `1 → 2 → … → n`.
    pub fn line(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Cycle `1 → 2 → … → n → 1`; needs `n ≥ 3`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Graph(format!("a ring needs at least 3 nodes, got {n}")));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Self::new(n, edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::new(n, edges)
    }

    /// Star centred on node 1.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|j| (0, j)).collect())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Copy with edge `e` pointing the other way.
    pub fn reoriented(&self, e: usize) -> Self {
        let mut edges = self.edges.clone();
        let (i, j) = edges[e];
        edges[e] = (j, i);
        Self {
            n_nodes: self.n_nodes,
            edges,
        }
    }

    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.n_nodes, self.edges.len());
        for (k, &(src, snk)) in self.edges.iter().enumerate() {
            e[(src, k)] = 1.0;
            e[(snk, k)] = -1.0;
        }
        e
    }

    /// `L = E Eᵀ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let e = self.incidence_matrix();
        &e * e.transpose()
    }

    /// `Eᵀ E`.
    pub fn edge_laplacian(&self) -> DMatrix<f64> {
        let e = self.incidence_matrix();
        e.transpose() * e
    }

    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut components = self.n_nodes;
        for &(i, j) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                components -= 1;
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// No cycles in the undirected skeleton (a forest).
    pub fn is_acyclic(&self) -> bool {
        self.edges.len() + self.component_count() == self.n_nodes
    }

    /// Laplacian eigenvalues, ascending.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        linalg::symmetric_eigenvalues(&self.laplacian())
    }

    /// Second-smallest Laplacian eigenvalue.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.laplacian_spectrum().get(1).copied().unwrap_or(0.0)
    }
}
