//! Reference oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use negamp::encoder::EncoderParams;
use negamp::graph::Graph;
use negamp::loss::{cosine, loss_gradient, PairedSelection};
use negamp::matrix::Mat;
use negamp::pools::{Candidate, Pool, ViewTag};
use negamp::rng;
use rand::seq::index;
use rand::Rng;

/// Sort-and-slice reference: every candidate's pool, per anchor.
pub fn oracle(k: &Mat<f64>, m: &Mat<f64>, anchor_view: ViewTag) -> Vec<Vec<(Candidate, Pool)>> {
    let n = k.rows();
    let (own, other) = match anchor_view {
        ViewTag::K => (k, m),
        ViewTag::M => (m, k),
    };
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            d / (na * nb)
        }
    };
    (0..n)
        .map(|i| {
            let mut c: Vec<(f64, Candidate)> = Vec::new();
            for j in (0..n).filter(|&j| j != i) {
                c.push((
                    cos(own.row(i), own.row(j)),
                    Candidate {
                        view: anchor_view,
                        node: j,
                    },
                ));
                c.push((
                    cos(own.row(i), other.row(j)),
                    Candidate {
                        view: anchor_view.other(),
                        node: j,
                    },
                ));
            }
            c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let total = c.len();
            let easy = total.div_ceil(4);
            let medium = (3 * total).div_ceil(4);
            c.into_iter()
                .enumerate()
                .map(|(r, (_, cand))| {
                    let pool = if r < easy {
                        Pool::Easy
                    } else if r < medium {
                        Pool::Medium
                    } else {
                        Pool::Hard
                    };
                    (cand, pool)
                })
                .collect()
        })
        .collect()
}

pub fn random_embeddings(seed: u64) -> (Mat<f64>, Mat<f64>) {
    let mut r = rng::seeded(seed);
    let n = r.random_range(3..=40);
    let d = r.random_range(1..=6);
    // Rows are copies from a small palette, so exact similarity ties occur
    // and are bitwise identical however the cosine is computed.
    let palette = Mat::from_fn(r.random_range(2..=n), d, |_, _| r.random_range(-1.0..1.0));
    let mut pick = |_| palette.row(r.random_range(0..palette.rows())).to_vec();
    let k: Vec<Vec<f64>> = (0..n).map(&mut pick).collect();
    let m: Vec<Vec<f64>> = (0..n).map(&mut pick).collect();
    (Mat::from_rows(&k).unwrap(), Mat::from_rows(&m).unwrap())
}

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub struct Instance {
    pub g1: Graph<f64>,
    pub g2: Graph<f64>,
    pub params: EncoderParams<f64>,
    pub selection: PairedSelection,
    pub tau: f64,
}

pub fn random_graph(n: usize, f: usize, r: &mut impl Rng) -> Graph<f64> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(0.4) {
                edges.push((u, v));
            }
        }
    }
    let x = Mat::from_fn(n, f, |_, _| r.random_range(-1.0..1.0));
    Graph::new(edges, x, None).unwrap()
}

pub fn random_negatives(n: usize, r: &mut impl Rng) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let amount = r.random_range(0..=others.len());
            let mut picked: Vec<usize> = index::sample(r, others.len(), amount)
                .into_iter()
                .map(|k| others[k])
                .collect();
            picked.sort_unstable();
            picked
        })
        .collect()
}

pub fn instance(seed: u64) -> Instance {
    let mut r = rng::seeded(seed);
    let n = r.random_range(3..=10);
    let f = r.random_range(2..=6);
    let h = r.random_range(2..=4);
    let d = r.random_range(2..=3);
    let base = random_graph(n, f, &mut r);
    // Second view: same features, different topology.
    let g2 = random_graph(n, f, &mut r)
        .with_features(base.features().clone())
        .unwrap();
    let params = EncoderParams::init(f, h, d, &mut r);
    let mut selection = PairedSelection::empty(n);
    selection.k_anchors.intra_negs = random_negatives(n, &mut r);
    selection.k_anchors.inter_negs = random_negatives(n, &mut r);
    selection.m_anchors.intra_negs = random_negatives(n, &mut r);
    selection.m_anchors.inter_negs = random_negatives(n, &mut r);
    Instance {
        g1: base,
        g2,
        params,
        selection,
        tau: r.random_range(0.2..1.0),
    }
}

pub fn objective(inst: &Instance, params: &EncoderParams<f64>) -> f64 {
    let k = params.embed(&inst.g1).unwrap();
    let m = params.embed(&inst.g2).unwrap();
    loss_gradient(&k, &m, &inst.selection, inst.tau)
        .unwrap()
        .loss
}

/// Entries far below the instance's largest gradient are compared against
/// that scale, since central differences only resolve them to O(h²).
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3 * scale).max(1e-12)
}

pub fn max_abs(m: &Mat<f64>) -> f64 {
    m.as_slice().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Worst relative error over every weight entry.
pub fn weight_check(inst: &Instance) -> f64 {
    let (k, ck) = inst.params.forward(&inst.g1).unwrap();
    let (m, cm) = inst.params.forward(&inst.g2).unwrap();
    let lg = loss_gradient(&k, &m, &inst.selection, inst.tau).unwrap();
    let grads = inst
        .params
        .backward(&ck, &lg.d_k)
        .unwrap()
        .add(&inst.params.backward(&cm, &lg.d_m).unwrap())
        .unwrap();

    let scale = max_abs(&grads.w1).max(max_abs(&grads.w2));
    let mut worst = 0.0f64;
    for layer in 0..2 {
        let analytic = if layer == 0 { &grads.w1 } else { &grads.w2 };
        for idx in 0..analytic.as_slice().len() {
            let mut plus = inst.params.clone();
            let mut minus = inst.params.clone();
            let (wp, wm) = if layer == 0 {
                (&mut plus.w1, &mut minus.w1)
            } else {
                (&mut plus.w2, &mut minus.w2)
            };
            wp.as_mut_slice()[idx] += H;
            wm.as_mut_slice()[idx] -= H;
            let numeric = (objective(inst, &plus) - objective(inst, &minus)) / (2.0 * H);
            worst = worst.max(rel_err(analytic.as_slice()[idx], numeric, scale));
        }
    }
    worst
}

/// Steps are relative to the row norm: cosine curvature grows as the row
/// shrinks, so a fixed step is too coarse for short rows.
pub fn embedding_check(inst: &Instance) -> f64 {
    let k = inst.params.embed(&inst.g1).unwrap();
    let m = inst.params.embed(&inst.g2).unwrap();
    let lg = loss_gradient(&k, &m, &inst.selection, inst.tau).unwrap();
    let f =
        |k: &Mat<f64>, m: &Mat<f64>| loss_gradient(k, m, &inst.selection, inst.tau).unwrap().loss;
    let scale = max_abs(&lg.d_k).max(max_abs(&lg.d_m));
    let step = |x: &Mat<f64>, idx: usize| H * negamp::matrix::norm(x.row(idx / x.cols()));
    let mut worst = 0.0f64;
    for idx in 0..k.as_slice().len() {
        let h = step(&k, idx);
        let (mut kp, mut km) = (k.clone(), k.clone());
        kp.as_mut_slice()[idx] += h;
        km.as_mut_slice()[idx] -= h;
        let numeric = (f(&kp, &m) - f(&km, &m)) / (2.0 * h);
        worst = worst.max(rel_err(lg.d_k.as_slice()[idx], numeric, scale));

        let h = step(&m, idx);
        let (mut mp, mut mm) = (m.clone(), m.clone());
        mp.as_mut_slice()[idx] += h;
        mm.as_mut_slice()[idx] -= h;
        let numeric = (f(&k, &mp) - f(&k, &mm)) / (2.0 * h);
        worst = worst.max(rel_err(lg.d_m.as_slice()[idx], numeric, scale));
    }
    worst
}

/// Skips instances where ReLU zeroes a whole embedding row (cosine is not
/// differentiable there) or leaves rank-one embeddings, whose similarities
/// are all ±1 and whose exact gradient vanishes.
pub fn differentiable(inst: &Instance) -> bool {
    [&inst.g1, &inst.g2].iter().all(|g| {
        let z = inst.params.embed(g).unwrap();
        let n = z.rows();
        let nonzero = (0..n).all(|r| z.row(r).iter().any(|&v| v != 0.0));
        let spread =
            (0..n).any(|a| (0..n).any(|b| cosine(z.row(a), z.row(b)).unwrap().abs() < 1.0 - 1e-6));
        nonzero && spread
    })
}

pub fn instances(first_seed: u64, count: usize) -> impl Iterator<Item = (u64, Instance)> {
    (first_seed..)
        .map(|s| (s, instance(s)))
        .filter(|(_, inst)| differentiable(inst))
        .take(count)
}
