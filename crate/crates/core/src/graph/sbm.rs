//! Stochastic block model generator with block-correlated Gaussian features.
//!
//! Node `i` belongs to block `i / nodes_per_block`. Block `b` has mean
//! feature vector `feature_signal · e_(b mod feature_dim)`; every entry gets
//! independent standard normal noise on top.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::rng::{self, Purpose};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_signal: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("sbm: {m}")));
        if self.blocks < 2 {
            return bad(format!("blocks = {} (need >= 2)", self.blocks));
        }
        if self.nodes_per_block < 2 {
            return bad(format!(
                "nodes_per_block = {} (need >= 2)",
                self.nodes_per_block
            ));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        // Degenerate p_in = p_out = 0 (edgeless) is allowed.
        if self.p_out > self.p_in || (self.p_out == self.p_in && self.p_in > 0.0) {
            return bad(format!(
                "p_out = {} must be below p_in = {}",
                self.p_out, self.p_in
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be >= 1".into());
        }
        if !(self.feature_signal >= 0.0) {
            return bad(format!(
                "feature_signal = {} must be >= 0",
                self.feature_signal
            ));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }
}

pub fn generate_sbm<T: Scalar>(spec: &SbmSpec) -> Result<Graph<T>> {
    spec.validate()?;
    let n = spec.num_nodes();
    let block = |i: usize| i / spec.nodes_per_block;

    let mut edge_rng = rng::stream(spec.seed, Purpose::SbmEdges, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) {
                spec.p_in
            } else {
                spec.p_out
            };
            if edge_rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }

    let mut feat_rng = rng::stream(spec.seed, Purpose::SbmFeatures, 0);
    let features = Mat::from_fn(n, spec.feature_dim, |i, j| {
        let noise: f64 = feat_rng.sample(StandardNormal);
        let mean = if j == block(i) % spec.feature_dim {
            spec.feature_signal
        } else {
            0.0
        };
        T::of(mean + noise)
    });

    let labels = (0..n).map(block).collect();
    Graph::from_canonical_edges(edges, features, Some(labels))
}
