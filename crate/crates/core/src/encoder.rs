//! Two-layer graph convolutional encoder with hand-written reverse pass.
//!
//! `H1 = ReLU(P X W1)`, `Z = P H1 W2`, where `P = D̃^-1/2 (A + I) D̃^-1/2`.
//! Both views are encoded with the same parameters.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Symmetric-normalized adjacency with self-loops, stored as CSR.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency<T> {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Row `i` as `(column, value)` pairs, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> Mat<T> {
        let n = self.num_nodes();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `P · x`. Since `P` is symmetric this is also `Pᵀ · x`.
    pub fn apply(&self, x: &Mat<T>) -> Result<Mat<T>> {
        if x.rows() != self.num_nodes() {
            return Err(Error::Shape(format!(
                "operator over {} nodes applied to {} rows",
                self.num_nodes(),
                x.rows()
            )));
        }
        let mut out = Mat::zeros(x.rows(), x.cols());
        for i in 0..self.num_nodes() {
            let dst = out.row_mut(i);
            for (j, w) in self.row(i) {
                for (d, &s) in dst.iter_mut().zip(x.row(j)) {
                    *d += w * s;
                }
            }
        }
        Ok(out)
    }
}

pub fn normalize_adjacency<T: Scalar>(graph: &Graph<T>) -> NormalizedAdjacency<T> {
    let adj = graph.adjacency();
    let n = graph.num_nodes();
    let inv_sqrt_deg: Vec<T> = (0..n)
        .map(|u| T::one() / T::of((adj.neighbors(u).len() + 1) as f64).sqrt())
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(adj.nnz() + n);
    let mut values = Vec::with_capacity(adj.nnz() + n);
    offsets.push(0);
    for u in 0..n {
        let mut self_done = false;
        for &v in adj.neighbors(u) {
            if !self_done && v > u {
                cols.push(u);
                values.push(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
                self_done = true;
            }
            cols.push(v);
            values.push(inv_sqrt_deg[u] * inv_sqrt_deg[v]);
        }
        if !self_done {
            cols.push(u);
            values.push(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
        }
        offsets.push(cols.len());
    }
    NormalizedAdjacency {
        offsets,
        cols,
        values,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams<T> {
    pub w1: Mat<T>,
    pub w2: Mat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub w1: Mat<T>,
    pub w2: Mat<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            w1: self.w1.add(&other.w1)?,
            w2: self.w2.add(&other.w2)?,
        })
    }
}

/// Activations kept from `forward` for the reverse pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub propagation: NormalizedAdjacency<T>,
    /// `P X`
    pub propagated_input: Mat<T>,
    /// `P X W1`, before ReLU
    pub pre_activation: Mat<T>,
    /// `P · ReLU(P X W1)`
    pub propagated_hidden: Mat<T>,
}

fn glorot<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Mat::from_fn(rows, cols, |_, _| T::of(rng.random_range(-limit..limit)))
}

impl<T: Scalar> EncoderParams<T> {
    /// Glorot-uniform initialization.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        let w1 = glorot(input_dim, hidden_dim, rng);
        let w2 = glorot(hidden_dim, output_dim, rng);
        Self { w1, w2 }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn forward(&self, graph: &Graph<T>) -> Result<(Mat<T>, ForwardCache<T>)> {
        if graph.feature_dim() != self.w1.rows() {
            return Err(Error::Shape(format!(
                "features have {} columns, encoder expects {}",
                graph.feature_dim(),
                self.w1.rows()
            )));
        }
        let propagation = normalize_adjacency(graph);
        let propagated_input = propagation.apply(graph.features())?;
        let pre_activation = propagated_input.matmul(&self.w1)?;
        let hidden = pre_activation.map(relu);
        let propagated_hidden = propagation.apply(&hidden)?;
        let output = propagated_hidden.matmul(&self.w2)?;
        Ok((
            output,
            ForwardCache {
                propagation,
                propagated_input,
                pre_activation,
                propagated_hidden,
            },
        ))
    }

    /// Embeddings only; no cache.
    pub fn embed(&self, graph: &Graph<T>) -> Result<Mat<T>> {
        self.forward(graph).map(|(z, _)| z)
    }

    pub fn backward(&self, cache: &ForwardCache<T>, grad_output: &Mat<T>) -> Result<Gradients<T>> {
        let expected = (cache.propagated_hidden.rows(), self.w2.cols());
        if grad_output.shape() != expected {
            return Err(Error::Shape(format!(
                "output gradient {:?}, expected {expected:?}",
                grad_output.shape()
            )));
        }
        let w2 = cache.propagated_hidden.t_matmul(grad_output)?;
        let grad_propagated_hidden = grad_output.matmul_t(&self.w2)?;
        let grad_hidden = cache.propagation.apply(&grad_propagated_hidden)?;
        let relu_mask = cache.pre_activation.map(relu_derivative);
        let grad_pre = grad_hidden.hadamard(&relu_mask)?;
        let w1 = cache.propagated_input.t_matmul(&grad_pre)?;
        Ok(Gradients { w1, w2 })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Checkpoint text: a `negamp-params v1` line, then for each of `w1`,
    /// `w2` a `<name> <rows> <cols>` header followed by comma-separated rows.
    pub fn to_text(&self) -> String {
        let mut out = String::from("negamp-params v1\n");
        for (name, m) in [("w1", &self.w1), ("w2", &self.w2)] {
            writeln!(out, "{name} {} {}", m.rows(), m.cols()).unwrap();
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", row.join(",")).unwrap();
            }
        }
        out
    }

    fn from_text(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "negamp-params v1")) => {}
            _ => return Err((1, "missing `negamp-params v1` header".into())),
        }
        let mut read_matrix = |name: &str| -> std::result::Result<Mat<T>, (usize, String)> {
            let (no, header) = lines.next().ok_or((0, format!("missing {name}")))?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            let dims = match parts.as_slice() {
                [n, r, c] if *n == name => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let (rows, cols) = dims.ok_or((no, format!("bad {name} header `{header}`")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (no, line) = lines.next().ok_or((no, format!("truncated {name}")))?;
                let row: Vec<T> = line
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map(T::of))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| (no, e.to_string()))?;
                if row.len() != cols {
                    return Err((no, format!("{} values, expected {cols}", row.len())));
                }
                data.extend(row);
            }
            Mat::from_vec(rows, cols, data).map_err(|e| (no, e.to_string()))
        };
        let w1 = read_matrix("w1")?;
        let w2 = read_matrix("w2")?;
        if w1.cols() != w2.rows() {
            return Err((0, "w1 columns do not match w2 rows".into()));
        }
        Ok(Self { w1, w2 })
    }
}

fn relu<T: Scalar>(v: T) -> T {
    v.max(T::zero())
}

fn relu_derivative<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}
