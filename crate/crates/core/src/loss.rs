//! Temperature-scaled contrastive loss over selected negatives.
//!
//! For an anchor `k_i` with positive `m_i`:
//!
//! ```text
//! ℓ_i = -log( e^{s⁺/τ} / (e^{s⁺/τ} + Σ_intra e^{cos(k_i,k_j)/τ} + Σ_inter e^{cos(k_i,m_j)/τ}) )
//! ```
//!
//! The objective averages `ℓ` over every anchor in both directions
//! (`K → M` and `M → K`). Similarities are cosines; a zero-norm row has
//! cosine 0 with everything.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Mat};
use crate::scalar::Scalar;

pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Ok(T::zero());
    }
    Ok((dot(u, v) / (nu * nv)).max(-T::one()).min(T::one()))
}

/// Rows scaled to unit length, plus the original norms. Zero rows stay zero.
fn normalize_rows<T: Scalar>(x: &Mat<T>) -> (Mat<T>, Vec<T>) {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let n = norm(x.row(r));
        if n > T::zero() {
            for v in out.row_mut(r) {
                *v /= n;
            }
        }
        norms.push(n);
    }
    (out, norms)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrices<T> {
    /// `inter[(i, j)] = cos(K_i, M_j)`; the diagonal holds the positive pairs.
    pub inter: Mat<T>,
    pub intra_k: Mat<T>,
    pub intra_m: Mat<T>,
}

impl<T: Scalar> SimilarityMatrices<T> {
    pub fn num_nodes(&self) -> usize {
        self.inter.rows()
    }
}

pub fn compute_similarities<T: Scalar>(k: &Mat<T>, m: &Mat<T>) -> Result<SimilarityMatrices<T>> {
    EmbeddingPair::new(k, m).map(|p| p.sims)
}

fn similarities_of_normalized<T: Scalar>(kn: &Mat<T>, mn: &Mat<T>) -> SimilarityMatrices<T> {
    let clamp = |v: T| v.max(-T::one()).min(T::one());
    let inter = kn.matmul_t(mn).expect("shapes checked").map(clamp);
    let intra_k = kn.matmul_t(kn).expect("shapes checked").map(clamp);
    let intra_m = mn.matmul_t(mn).expect("shapes checked").map(clamp);
    SimilarityMatrices {
        inter,
        intra_k,
        intra_m,
    }
}

/// Negatives chosen for each anchor of one view.
///
/// `intra_negs[i]` index rows of the anchor's own view, `inter_negs[i]` rows
/// of the other view. Neither may contain `i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSelection {
    pub intra_negs: Vec<Vec<usize>>,
    pub inter_negs: Vec<Vec<usize>>,
}

impl NegativeSelection {
    pub fn empty(n: usize) -> Self {
        Self {
            intra_negs: vec![Vec::new(); n],
            inter_negs: vec![Vec::new(); n],
        }
    }

    /// Every candidate negative of every anchor.
    pub fn all(n: usize) -> Self {
        let others = |i: usize| (0..n).filter(|&j| j != i).collect::<Vec<_>>();
        Self {
            intra_negs: (0..n).map(others).collect(),
            inter_negs: (0..n).map(others).collect(),
        }
    }

    pub fn num_anchors(&self) -> usize {
        self.intra_negs.len()
    }

    /// Number of negatives selected for `anchor`.
    pub fn count(&self, anchor: usize) -> usize {
        self.intra_negs[anchor].len() + self.inter_negs[anchor].len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.intra_negs.len() != n || self.inter_negs.len() != n {
            return Err(Error::Shape(format!(
                "selection covers {}/{} anchors, expected {n}",
                self.intra_negs.len(),
                self.inter_negs.len()
            )));
        }
        for (i, (intra, inter)) in self.intra_negs.iter().zip(&self.inter_negs).enumerate() {
            for &j in intra.iter().chain(inter) {
                if j >= n {
                    return Err(Error::OutOfRange { index: j, len: n });
                }
                if j == i {
                    return Err(Error::InvalidArgument(format!(
                        "anchor {i} lists itself as a negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Negatives for both loss directions: anchors in `K` and anchors in `M`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedSelection {
    pub k_anchors: NegativeSelection,
    pub m_anchors: NegativeSelection,
}

impl PairedSelection {
    pub fn empty(n: usize) -> Self {
        Self {
            k_anchors: NegativeSelection::empty(n),
            m_anchors: NegativeSelection::empty(n),
        }
    }

    pub fn all(n: usize) -> Self {
        Self {
            k_anchors: NegativeSelection::all(n),
            m_anchors: NegativeSelection::all(n),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.k_anchors.validate(n)?;
        self.m_anchors.validate(n)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {tau}"
        )));
    }
    Ok(())
}

/// Softmax over `[positive, negatives...] / τ`.
///
/// Returns `ℓ = -log softmax[0]` and the softmax weights (index 0 is the
/// positive) in `weights`.
fn anchor_term<T: Scalar>(positive: T, negatives: &[T], inv_tau: T, weights: &mut Vec<T>) -> T {
    let max = negatives.iter().fold(positive, |acc, &s| acc.max(s)) * inv_tau;
    weights.clear();
    weights.push((positive * inv_tau - max).exp());
    weights.extend(negatives.iter().map(|&s| (s * inv_tau - max).exp()));
    let z: T = weights.iter().copied().sum();
    for w in weights.iter_mut() {
        *w /= z;
    }
    z.ln() - (positive * inv_tau - max)
}

/// Which similarity matrices one loss direction reads.
struct Direction<'a, T> {
    selection: &'a NegativeSelection,
    intra: &'a Mat<T>,
    /// `true` when inter similarities for this anchor are read column-wise
    /// (`M → K` reads `inter[(j, i)]`).
    transposed: bool,
}

/// Accumulated `∂L/∂sim` for the three similarity matrices.
struct SimGradients<T> {
    inter: Mat<T>,
    intra_k: Mat<T>,
    intra_m: Mat<T>,
}

fn evaluate<T: Scalar>(
    sims: &SimilarityMatrices<T>,
    selection: &PairedSelection,
    tau: f64,
    mut grads: Option<&mut SimGradients<T>>,
) -> Result<T> {
    check_tau(tau)?;
    let n = sims.num_nodes();
    selection.validate(n)?;
    let inv_tau = T::of(1.0 / tau);
    let scale = T::one() / T::of((2 * n) as f64);
    let directions = [
        Direction {
            selection: &selection.k_anchors,
            intra: &sims.intra_k,
            transposed: false,
        },
        Direction {
            selection: &selection.m_anchors,
            intra: &sims.intra_m,
            transposed: true,
        },
    ];
    let mut total = T::zero();
    let mut negs = Vec::new();
    let mut weights = Vec::new();
    for (d, dir) in directions.iter().enumerate() {
        let inter_at = |i: usize, j: usize| {
            if dir.transposed {
                sims.inter[(j, i)]
            } else {
                sims.inter[(i, j)]
            }
        };
        for i in 0..n {
            let intra = &dir.selection.intra_negs[i];
            let inter = &dir.selection.inter_negs[i];
            negs.clear();
            negs.extend(intra.iter().map(|&j| dir.intra[(i, j)]));
            negs.extend(inter.iter().map(|&j| inter_at(i, j)));
            let positive = sims.inter[(i, i)];
            total += anchor_term(positive, &negs, inv_tau, &mut weights);

            if let Some(g) = grads.as_deref_mut() {
                let c = scale * inv_tau;
                g.inter[(i, i)] += c * (weights[0] - T::one());
                let intra_grad = if d == 0 {
                    &mut g.intra_k
                } else {
                    &mut g.intra_m
                };
                for (&j, &w) in intra.iter().zip(&weights[1..]) {
                    intra_grad[(i, j)] += c * w;
                }
                for (&j, &w) in inter.iter().zip(&weights[1 + intra.len()..]) {
                    if dir.transposed {
                        g.inter[(j, i)] += c * w;
                    } else {
                        g.inter[(i, j)] += c * w;
                    }
                }
            }
        }
    }
    Ok(total * scale)
}

/// Symmetrized loss value from precomputed similarities.
pub fn loss<T: Scalar>(
    sims: &SimilarityMatrices<T>,
    selection: &PairedSelection,
    tau: f64,
) -> Result<T> {
    evaluate(sims, selection, tau, None)
}

/// Two views' embeddings with their row-normalized forms and similarities.
#[derive(Clone, Debug)]
pub struct EmbeddingPair<T> {
    k_unit: Mat<T>,
    m_unit: Mat<T>,
    k_norms: Vec<T>,
    m_norms: Vec<T>,
    sims: SimilarityMatrices<T>,
}

impl<T: Scalar> EmbeddingPair<T> {
    pub fn new(k: &Mat<T>, m: &Mat<T>) -> Result<Self> {
        if k.shape() != m.shape() {
            return Err(Error::Shape(format!(
                "K {:?} vs M {:?}",
                k.shape(),
                m.shape()
            )));
        }
        let (k_unit, k_norms) = normalize_rows(k);
        let (m_unit, m_norms) = normalize_rows(m);
        let sims = similarities_of_normalized(&k_unit, &m_unit);
        Ok(Self {
            k_unit,
            m_unit,
            k_norms,
            m_norms,
            sims,
        })
    }

    pub fn similarities(&self) -> &SimilarityMatrices<T> {
        &self.sims
    }

    /// Loss value and its exact gradient with respect to `K` and `M`.
    pub fn loss_gradient(&self, selection: &PairedSelection, tau: f64) -> Result<LossGradient<T>> {
        let n = self.sims.num_nodes();
        let mut g = SimGradients {
            inter: Mat::zeros(n, n),
            intra_k: Mat::zeros(n, n),
            intra_m: Mat::zeros(n, n),
        };
        let loss = evaluate(&self.sims, selection, tau, Some(&mut g))?;

        // Gradients with respect to the normalized rows.
        let (kn, mn) = (&self.k_unit, &self.m_unit);
        let sym_k = g.intra_k.add(&g.intra_k.transpose())?;
        let sym_m = g.intra_m.add(&g.intra_m.transpose())?;
        let d_kn = g.inter.matmul(mn)?.add(&sym_k.matmul(kn)?)?;
        let d_mn = g.inter.t_matmul(kn)?.add(&sym_m.matmul(mn)?)?;

        Ok(LossGradient {
            loss,
            d_k: through_normalization(kn, &self.k_norms, &d_kn),
            d_m: through_normalization(mn, &self.m_norms, &d_mn),
        })
    }
}

#[derive(Clone, Debug)]
pub struct LossGradient<T> {
    pub loss: T,
    pub d_k: Mat<T>,
    pub d_m: Mat<T>,
}

/// Loss value and its exact gradient with respect to both embedding matrices.
pub fn loss_gradient<T: Scalar>(
    k: &Mat<T>,
    m: &Mat<T>,
    selection: &PairedSelection,
    tau: f64,
) -> Result<LossGradient<T>> {
    EmbeddingPair::new(k, m)?.loss_gradient(selection, tau)
}

/// Chain rule through `x ↦ x / ‖x‖`: `dx = (dx̂ - x̂ (x̂·dx̂)) / ‖x‖`.
fn through_normalization<T: Scalar>(unit: &Mat<T>, norms: &[T], grad_unit: &Mat<T>) -> Mat<T> {
    let mut out = Mat::zeros(unit.rows(), unit.cols());
    for (r, &norm) in norms.iter().enumerate() {
        if norm == T::zero() {
            continue;
        }
        let u = unit.row(r);
        let g = grad_unit.row(r);
        let radial = dot(u, g);
        for ((o, &ui), &gi) in out.row_mut(r).iter_mut().zip(u).zip(g) {
            *o = (gi - ui * radial) / norm;
        }
    }
    out
}
