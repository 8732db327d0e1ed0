//! Per-anchor easy / medium / hard negative pools.
//!
//! For an anchor in one view, the candidate negatives are every other node
//! of both views (the anchor's positive counterpart excluded). Candidates are
//! sorted by ascending cosine similarity to the anchor, so the first quarter
//! (`⌈n/4⌉` items) is easy, the next half up to `⌈3n/4⌉` is medium and the
//! rest is hard.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::SimilarityMatrices;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewTag {
    K,
    M,
}

impl ViewTag {
    pub fn other(self) -> Self {
        match self {
            ViewTag::K => ViewTag::M,
            ViewTag::M => ViewTag::K,
        }
    }
}

/// A node embedding in a given view. Orders by `(view, node)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub view: ViewTag,
    pub node: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    Easy,
    Medium,
    Hard,
}

/// `(|easy|, |medium|, |hard|)` for `n` candidates.
pub fn pool_sizes(n: usize) -> (usize, usize, usize) {
    let (easy_end, medium_end) = pool_bounds(n);
    (easy_end, medium_end - easy_end, n - medium_end)
}

/// `(⌈n/4⌉, ⌈3n/4⌉)`.
pub fn pool_bounds(n: usize) -> (usize, usize) {
    (n.div_ceil(4), (3 * n).div_ceil(4))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedCandidate<T> {
    pub candidate: Candidate,
    pub similarity: T,
}

#[derive(Clone, Debug)]
pub struct NegPoolIndex<T> {
    anchor_view: ViewTag,
    rankings: Vec<Vec<RankedCandidate<T>>>,
    easy_end: usize,
    medium_end: usize,
}

impl<T: Scalar> NegPoolIndex<T> {
    pub fn anchor_view(&self) -> ViewTag {
        self.anchor_view
    }

    pub fn num_anchors(&self) -> usize {
        self.rankings.len()
    }

    /// Candidates per anchor, `2N - 2`.
    pub fn num_candidates(&self) -> usize {
        self.rankings.first().map_or(0, Vec::len)
    }

    pub fn easy_end(&self) -> usize {
        self.easy_end
    }

    pub fn medium_end(&self) -> usize {
        self.medium_end
    }

    /// Anchor's candidates, least similar first.
    pub fn ranking(&self, anchor: usize) -> &[RankedCandidate<T>] {
        &self.rankings[anchor]
    }

    pub fn pool(&self, anchor: usize, pool: Pool) -> &[RankedCandidate<T>] {
        let r = &self.rankings[anchor];
        match pool {
            Pool::Easy => &r[..self.easy_end],
            Pool::Medium => &r[self.easy_end..self.medium_end],
            Pool::Hard => &r[self.medium_end..],
        }
    }

    /// Pool of a 1-based rank position.
    pub fn pool_of_rank(&self, rank: usize) -> Pool {
        if rank <= self.easy_end {
            Pool::Easy
        } else if rank <= self.medium_end {
            Pool::Medium
        } else {
            Pool::Hard
        }
    }

    pub fn pool_membership(&self, anchor: usize, candidate: Candidate) -> Result<Pool> {
        if anchor >= self.num_anchors() {
            return Err(Error::OutOfRange {
                index: anchor,
                len: self.num_anchors(),
            });
        }
        if candidate.node == anchor {
            return Err(Error::InvalidArgument(
                if candidate.view == self.anchor_view {
                    format!("node {anchor} is the anchor itself")
                } else {
                    format!("node {anchor} in the other view is the anchor's positive pair")
                },
            ));
        }
        let pos = self.rankings[anchor]
            .iter()
            .position(|r| r.candidate == candidate)
            .ok_or(Error::OutOfRange {
                index: candidate.node,
                len: self.num_anchors(),
            })?;
        Ok(self.pool_of_rank(pos + 1))
    }

    /// Text report: pool boundaries and the five least / most similar candidates per anchor.
    pub fn debug_report(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "anchor_view={:?} candidates={} easy_end={} medium_end={}",
            self.anchor_view,
            self.num_candidates(),
            self.easy_end,
            self.medium_end
        )
        .unwrap();
        let fmt = |items: &[RankedCandidate<T>]| {
            items
                .iter()
                .map(|r| {
                    format!(
                        "{:?}{}:{:.4}",
                        r.candidate.view, r.candidate.node, r.similarity
                    )
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        for (i, ranking) in self.rankings.iter().enumerate() {
            let tail = ranking.len().saturating_sub(5);
            writeln!(
                out,
                "{i}\tbottom5 {}\ttop5 {}",
                fmt(&ranking[..ranking.len().min(5)]),
                fmt(&ranking[tail..])
            )
            .unwrap();
        }
        out
    }
}

/// Ranks every anchor of `anchor_view` and splits its candidates into pools.
///
/// For `M` anchors the intra similarities come from `intra_m` and the inter
/// ones from the transposed `inter` matrix.
pub fn build_pools<T: Scalar>(
    sims: &SimilarityMatrices<T>,
    anchor_view: ViewTag,
) -> Result<NegPoolIndex<T>> {
    let n = sims.num_nodes();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 nodes to form negatives, got {n}"
        )));
    }
    let intra = match anchor_view {
        ViewTag::K => &sims.intra_k,
        ViewTag::M => &sims.intra_m,
    };
    let inter = |anchor: usize, j: usize| match anchor_view {
        ViewTag::K => sims.inter[(anchor, j)],
        ViewTag::M => sims.inter[(j, anchor)],
    };
    let other = anchor_view.other();
    let rankings = (0..n)
        .map(|i| {
            let mut ranked: Vec<RankedCandidate<T>> = (0..n)
                .filter(|&j| j != i)
                .flat_map(|j| {
                    [
                        RankedCandidate {
                            candidate: Candidate {
                                view: anchor_view,
                                node: j,
                            },
                            similarity: intra[(i, j)],
                        },
                        RankedCandidate {
                            candidate: Candidate {
                                view: other,
                                node: j,
                            },
                            similarity: inter(i, j),
                        },
                    ]
                })
                .collect();
            ranked.sort_by(|a, b| {
                a.similarity
                    .partial_cmp(&b.similarity)
                    .unwrap_or(Ordering::Equal)
                    .then(a.candidate.cmp(&b.candidate))
            });
            ranked
        })
        .collect();
    let (easy_end, medium_end) = pool_bounds(2 * n - 2);
    Ok(NegPoolIndex {
        anchor_view,
        rankings,
        easy_end,
        medium_end,
    })
}

/// Pools for both loss directions.
#[derive(Clone, Debug)]
pub struct PoolPair<T> {
    pub k_anchors: NegPoolIndex<T>,
    pub m_anchors: NegPoolIndex<T>,
}

pub fn build_pool_pair<T: Scalar>(sims: &SimilarityMatrices<T>) -> Result<PoolPair<T>> {
    Ok(PoolPair {
        k_anchors: build_pools(sims, ViewTag::K)?,
        m_anchors: build_pools(sims, ViewTag::M)?,
    })
}
