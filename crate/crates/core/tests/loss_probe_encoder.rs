use negamp::encoder::{normalize_adjacency, EncoderParams};
use negamp::graph::Graph;
use negamp::loss::{compute_similarities, loss, PairedSelection};
use negamp::matrix::Mat;
use negamp::probe::{embed_for_eval, micro_f1, random_split, EvalProtocol};
use negamp::rng;
use proptest::prelude::*;

fn arb_pair() -> impl Strategy<Value = (Mat<f64>, Mat<f64>)> {
    (2usize..8, 1usize..5).prop_flat_map(|(n, d)| {
        let m = move || {
            prop::collection::vec(-3.0f64..3.0, n * d)
                .prop_map(move |v| Mat::from_vec(n, d, v).unwrap())
        };
        (m(), m())
    })
}

fn all_loss(k: &Mat<f64>, m: &Mat<f64>, tau: f64) -> f64 {
    let sims = compute_similarities(k, m).unwrap();
    loss(&sims, &PairedSelection::all(k.rows()), tau).unwrap()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n(a) == 0.0 || n(b) == 0.0 {
        0.0
    } else {
        d / (n(a) * n(b))
    }
}

/// Direct transcription of the full-negative two-view objective.
fn full_negative_reference(k: &Mat<f64>, m: &Mat<f64>, tau: f64) -> f64 {
    let n = k.rows();
    let one_side = |u: &Mat<f64>, v: &Mat<f64>| -> f64 {
        (0..n)
            .map(|i| {
                let pos = (cos(u.row(i), v.row(i)) / tau).exp();
                let neg: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        (cos(u.row(i), u.row(j)) / tau).exp()
                            + (cos(u.row(i), v.row(j)) / tau).exp()
                    })
                    .sum();
                -(pos / (pos + neg)).ln()
            })
            .sum()
    };
    (one_side(k, m) + one_side(m, k)) / (2 * n) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_selection_is_the_full_negative_objective((k, m) in arb_pair(), tau in 0.1f64..2.0) {
        let ours = all_loss(&k, &m, tau);
        let reference = full_negative_reference(&k, &m, tau);
        prop_assert!((ours - reference).abs() <= 1e-10 * reference.abs().max(1.0), "{ours} vs {reference}");
    }

    #[test]
    fn invariant_to_row_rescaling((k, m) in arb_pair(), row in 0usize..8, factor in 1e-3f64..1e3) {
        let row = row % k.rows();
        let mut k2 = k.clone();
        for v in k2.row_mut(row) {
            *v *= factor;
        }
        let (a, b) = (all_loss(&k, &m, 0.5), all_loss(&k2, &m, 0.5));
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn monotone_in_positive_and_negative_similarity(seed in any::<u64>()) {
        use negamp::loss::EmbeddingPair;
        use rand::Rng;
        let mut r = rng::seeded(seed);
        let n = 4;
        let k = Mat::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
        let m = Mat::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
        let pair = EmbeddingPair::new(&k, &m).unwrap();
        let mut sims = pair.similarities().clone();
        let sel = PairedSelection::all(n);
        let base = loss(&sims, &sel, 0.5).unwrap();
        // Raising a positive similarity lowers the loss.
        sims.inter[(0, 0)] += 0.1;
        prop_assert!(loss(&sims, &sel, 0.5).unwrap() < base);
        sims.inter[(0, 0)] -= 0.1;
        // Raising any selected negative similarity raises it.
        sims.intra_k[(1, 2)] += 0.1;
        prop_assert!(loss(&sims, &sel, 0.5).unwrap() > base);
        sims.intra_k[(1, 2)] -= 0.1;
        sims.inter[(2, 3)] += 0.1;
        prop_assert!(loss(&sims, &sel, 0.5).unwrap() > base);
    }

    #[test]
    fn micro_f1_equals_accuracy(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..200)) {
        let (pred, gold): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        // Micro-averaging pools per-class TP / FP / FN counts.
        let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
        for c in 0..5 {
            for (&p, &g) in pred.iter().zip(&gold) {
                match (p == c, g == c) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fnn += 1,
                    _ => {}
                }
            }
        }
        let pooled = 2.0 * tp as f64 / (2 * tp + fp + fnn) as f64;
        let accuracy = pred.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / pred.len() as f64;
        let f1 = micro_f1(&pred, &gold).unwrap();
        prop_assert!((f1 - pooled).abs() < 1e-12);
        prop_assert!((f1 - accuracy).abs() < 1e-12);
    }

    #[test]
    fn splits_partition_the_nodes(n in 1usize..500, seed in any::<u64>()) {
        let p = EvalProtocol::default();
        let s = random_split(n, &p, &mut rng::seeded(seed));
        prop_assert_eq!(&s, &random_split(n, &p, &mut rng::seeded(seed)));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn forward_commutes_with_node_relabelling(
        n in 2usize..12,
        seed in any::<u64>(),
        edges in prop::collection::vec((0usize..12, 0usize..12), 0..30),
    ) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut r = rng::seeded(seed);
        let edges: Vec<_> = edges.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
        let x = Mat::from_fn(n, 4, |_, _| r.random_range(-1.0..1.0));
        let g = Graph::new(edges.clone(), x.clone(), None).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        // Node u of g becomes node perm[u].
        let px = Mat::from_fn(n, 4, |i, c| x[(perm.iter().position(|&p| p == i).unwrap(), c)]);
        let pg = Graph::new(edges.iter().map(|&(u, v)| (perm[u], perm[v])), px, None).unwrap();
        let params = EncoderParams::<f64>::init(4, 5, 3, &mut r);
        let (z, pz) = (params.embed(&g).unwrap(), params.embed(&pg).unwrap());
        for u in 0..n {
            for c in 0..3 {
                prop_assert!((z[(u, c)] - pz[(perm[u], c)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn evaluation_embeds_the_clean_graph() {
    use rand::Rng;
    let mut r = rng::seeded(4);
    let x = Mat::from_fn(6, 3, |_, _| r.random_range(-1.0..1.0));
    let g = Graph::new(
        [(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)],
        x,
        Some(vec![0, 0, 0, 1, 1, 1]),
    )
    .unwrap();
    let params = EncoderParams::<f64>::init(3, 4, 2, &mut r);
    // Independent dense evaluation of the two-layer encoder on the full graph.
    let p = normalize_adjacency(&g).to_dense();
    let h1 = p
        .matmul(&g.features().matmul(&params.w1).unwrap())
        .unwrap()
        .map(|v: f64| v.max(0.0));
    let z = p.matmul(&h1.matmul(&params.w2).unwrap()).unwrap();
    assert!(embed_for_eval(&params, &g).unwrap().max_abs_diff(&z) < 1e-12);
}
