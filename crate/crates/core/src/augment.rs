//! Stochastic graph views: per-edge removal and whole-column feature masking.

use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Mat;
use crate::rng;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub edge_drop_prob_v1: f64,
    pub feat_mask_prob_v1: f64,
    pub edge_drop_prob_v2: f64,
    pub feat_mask_prob_v2: f64,
}

impl AugmentConfig {
    pub const NONE: Self = Self {
        edge_drop_prob_v1: 0.0,
        feat_mask_prob_v1: 0.0,
        edge_drop_prob_v2: 0.0,
        feat_mask_prob_v2: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("edge_drop_prob_v1", self.edge_drop_prob_v1),
            ("feat_mask_prob_v1", self.feat_mask_prob_v1),
            ("edge_drop_prob_v2", self.edge_drop_prob_v2),
            ("feat_mask_prob_v2", self.feat_mask_prob_v2),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "augment.{name} = {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// A corrupted copy of a graph together with the masks that produced it.
#[derive(Clone, Debug)]
pub struct AugmentedView<T> {
    pub graph: Graph<T>,
    /// One flag per undirected edge of the source graph, in `Graph::edges` order.
    pub kept_edge_flags: Vec<bool>,
    /// Zeroed feature columns, ascending.
    pub masked_columns: Vec<usize>,
}

impl<T: Scalar> AugmentedView<T> {
    /// The unmodified graph viewed as an augmentation with nothing removed.
    pub fn identity(graph: &Graph<T>) -> Self {
        Self {
            graph: graph.clone(),
            kept_edge_flags: vec![true; graph.num_edges()],
            masked_columns: Vec::new(),
        }
    }
}

/// Keeps each undirected edge independently with probability `1 - prob`.
pub fn drop_edges<T: Scalar, R: Rng + ?Sized>(
    graph: &Graph<T>,
    prob: f64,
    rng: &mut R,
) -> (Vec<(usize, usize)>, Vec<bool>) {
    let edges = graph.edges();
    let flags: Vec<bool> = edges.iter().map(|_| rng.random_bool(1.0 - prob)).collect();
    let kept = edges
        .into_iter()
        .zip(&flags)
        .filter_map(|(e, &keep)| keep.then_some(e))
        .collect();
    (kept, flags)
}

/// Zeroes each whole feature column independently with probability `prob`.
pub fn mask_features<T: Scalar, R: Rng + ?Sized>(
    features: &Mat<T>,
    prob: f64,
    rng: &mut R,
) -> (Mat<T>, Vec<usize>) {
    let masked: Vec<usize> = (0..features.cols())
        .filter(|_| rng.random_bool(prob))
        .collect();
    let mut out = features.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for &c in &masked {
            row[c] = T::zero();
        }
    }
    (out, masked)
}

fn make_view<T: Scalar>(
    graph: &Graph<T>,
    edge_drop: f64,
    feat_mask: f64,
    rng: &mut rng::Rng,
) -> Result<AugmentedView<T>> {
    let (kept, kept_edge_flags) = drop_edges(graph, edge_drop, rng);
    let (features, masked_columns) = mask_features(graph.features(), feat_mask, rng);
    Ok(AugmentedView {
        graph: Graph::from_canonical_edges(kept, features, None)?,
        kept_edge_flags,
        masked_columns,
    })
}

/// Draws the two views for one epoch.
///
/// Each view gets its own sub-stream seeded from `epoch_rng`, so the draws
/// of one view do not depend on the other view's probabilities.
pub fn make_views<T: Scalar, R: RngCore + ?Sized>(
    graph: &Graph<T>,
    config: &AugmentConfig,
    epoch_rng: &mut R,
) -> Result<(AugmentedView<T>, AugmentedView<T>)> {
    config.validate()?;
    let mut rng1 = rng::Rng::seed_from_u64(epoch_rng.next_u64());
    let mut rng2 = rng::Rng::seed_from_u64(epoch_rng.next_u64());
    let v1 = make_view(
        graph,
        config.edge_drop_prob_v1,
        config.feat_mask_prob_v1,
        &mut rng1,
    )?;
    let v2 = make_view(
        graph,
        config.edge_drop_prob_v2,
        config.feat_mask_prob_v2,
        &mut rng2,
    )?;
    Ok((v1, v2))
}
