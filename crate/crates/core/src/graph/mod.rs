//! Undirected graphs with dense node features and optional class labels.

mod io;
mod sbm;

pub use io::{load_dataset, write_dataset, DatasetPaths};
pub use sbm::{generate_sbm, SbmSpec};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Symmetric compressed-sparse-row adjacency without self-loops.
///
/// Neighbor lists are sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Csr {
    /// Builds the adjacency from canonical edges (`u < v`, sorted, unique).
    fn from_canonical(num_nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0usize; offsets[num_nodes]];
        for &(u, v) in edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for u in 0..num_nodes {
            neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Self { offsets, neighbors }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Number of stored directed entries (twice the undirected edge count).
    pub fn nnz(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_nodes()).all(|u| {
            self.neighbors(u)
                .iter()
                .all(|&v| v != u && self.neighbors(v).binary_search(&u).is_ok())
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    adjacency: Csr,
    features: Mat<T>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl<T: Scalar> Graph<T> {
    /// Validates and builds a graph.
    ///
    /// Edges may appear in either orientation and more than once; they are
    /// deduplicated. Self-loops and out-of-range endpoints are rejected.
    pub fn new(
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Mat<T>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::Dataset("graph needs at least one node".into()));
        }
        let mut canonical = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::OutOfRange { index: x, len: n });
                }
            }
            if u == v {
                return Err(Error::Dataset(format!("self-loop on node {u}")));
            }
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        Self::from_canonical_edges(canonical, features, labels)
    }

    /// Trusted constructor: `edges` must already be canonical (`u < v`, sorted, unique).
    pub(crate) fn from_canonical_edges(
        edges: Vec<(usize, usize)>,
        features: Mat<T>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.rows();
        let num_classes = match &labels {
            Some(l) => {
                if l.len() != n {
                    return Err(Error::Dataset(format!("{} labels for {n} nodes", l.len())));
                }
                l.iter().max().map_or(0, |&m| m + 1)
            }
            None => 0,
        };
        Ok(Self {
            adjacency: Csr::from_canonical(n, &edges),
            features,
            labels,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn features(&self) -> &Mat<T> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn neighbors(&self, node: usize) -> Result<&[usize]> {
        self.check_node(node)?;
        Ok(self.adjacency.neighbors(node))
    }

    /// Number of stored neighbors of `node`; self-loops are never stored.
    pub fn degree(&self, node: usize) -> Result<usize> {
        Ok(self.neighbors(node)?.len())
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes() {
            for &v in self.adjacency.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Same topology and labels with a different feature matrix.
    pub fn with_features(&self, features: Mat<T>) -> Result<Self> {
        if features.rows() != self.num_nodes() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                self.num_nodes()
            )));
        }
        Ok(Self {
            adjacency: self.adjacency.clone(),
            features,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        })
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes() {
            return Err(Error::OutOfRange {
                index: node,
                len: self.num_nodes(),
            });
        }
        Ok(())
    }
}
