//! Linear evaluation of frozen embeddings.
//!
//! Each repeat draws a random train/validation/test split, fits an
//! l2-regularized multinomial logistic regression on standardized training
//! embeddings for every regularization strength in a grid, keeps the one
//! with the best validation accuracy and reports micro-F1 on the test nodes.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Mat;
use crate::rng::{self, Purpose};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub num_repeats: usize,
    pub l2_grid: Vec<f64>,
    pub probe_max_iters: usize,
    /// Initial (and maximum) gradient-descent step size.
    pub probe_lr: f64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            train_frac: 0.1,
            val_frac: 0.1,
            test_frac: 0.8,
            num_repeats: 10,
            l2_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            probe_max_iters: 500,
            probe_lr: 1.0,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f))
            || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "split fractions {fracs:?} must be in [0,1] and sum to 1"
            )));
        }
        if self.num_repeats == 0 {
            return Err(Error::Config("protocol.num_repeats must be >= 1".into()));
        }
        if self.l2_grid.is_empty() || self.l2_grid.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::Config(
                "protocol.l2_grid must be non-empty and non-negative".into(),
            ));
        }
        if !(self.probe_lr > 0.0) || self.probe_max_iters == 0 {
            return Err(Error::Config(
                "probe_lr and probe_max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled split; train and validation sizes are rounded, test takes the rest.
pub fn random_split<R: rand::Rng + ?Sized>(
    n: usize,
    protocol: &EvalProtocol,
    rng: &mut R,
) -> Split {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_train = ((protocol.train_frac * n as f64).round() as usize).min(n);
    let n_val = ((protocol.val_frac * n as f64).round() as usize).min(n - n_train);
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Split {
        train: order,
        val,
        test,
    }
}

/// Per-column standardization fitted on a subset of rows.
#[derive(Clone, Debug)]
pub struct Standardizer<T> {
    mean: Vec<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &Mat<T>, rows: &[usize]) -> Self {
        let d = x.cols();
        let count = T::of(rows.len() as f64);
        let mut mean = vec![T::zero(); d];
        for &r in rows {
            for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![T::zero(); d];
        for &r in rows {
            for ((s, &v), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let inv_std = var
            .into_iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > T::of(1e-12) {
                    T::one() / sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, inv_std }
    }

    pub fn transform(&self, x: &Mat<T>, rows: &[usize]) -> Mat<T> {
        Mat::from_fn(rows.len(), x.cols(), |i, j| {
            (x[(rows[i], j)] - self.mean[j]) * self.inv_std[j]
        })
    }
}

/// Multinomial logistic regression on standardized inputs.
#[derive(Clone, Debug)]
pub struct LinearProbe<T> {
    pub standardizer: Standardizer<T>,
    /// `D × C`
    pub weights: Mat<T>,
    pub bias: Vec<T>,
}

/// Objective value and gradients of the regularized softmax cross-entropy.
pub struct ProbeObjective<T> {
    pub value: T,
    pub grad_weights: Mat<T>,
    pub grad_bias: Vec<T>,
}

/// `mean_i CE(softmax(x_i W + b), y_i) + (l2 / 2) ‖W‖²`; the bias is not regularized.
pub fn probe_objective<T: Scalar>(
    x: &Mat<T>,
    labels: &[usize],
    weights: &Mat<T>,
    bias: &[T],
    l2: f64,
) -> ProbeObjective<T> {
    let (n, c) = (x.rows(), weights.cols());
    let inv_n = T::one() / T::of(n as f64);
    let l2 = T::of(l2);
    let logits = x.matmul(weights).expect("probe shapes");
    let mut residual = Mat::zeros(n, c);
    let mut value = T::zero();
    for i in 0..n {
        let row: Vec<T> = logits
            .row(i)
            .iter()
            .zip(bias)
            .map(|(&z, &b)| z + b)
            .collect();
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
        let z: T = exps.iter().copied().sum();
        value += z.ln() + max - row[labels[i]];
        for (k, r) in residual.row_mut(i).iter_mut().enumerate() {
            *r = exps[k] / z - if k == labels[i] { T::one() } else { T::zero() };
        }
    }
    let sq: T = weights.as_slice().iter().map(|&w| w * w).sum();
    value = value * inv_n + l2 * sq / T::of(2.0);
    let grad_weights = x
        .t_matmul(&residual)
        .expect("probe shapes")
        .scale(inv_n)
        .add(&weights.scale(l2))
        .expect("probe shapes");
    let grad_bias = (0..c)
        .map(|k| residual.column(k).into_iter().sum::<T>() * inv_n)
        .collect();
    ProbeObjective {
        value,
        grad_weights,
        grad_bias,
    }
}

impl<T: Scalar> LinearProbe<T> {
    pub fn predict(&self, embeddings: &Mat<T>, rows: &[usize]) -> Vec<usize> {
        let x = self.standardizer.transform(embeddings, rows);
        let logits = x.matmul(&self.weights).expect("probe shapes");
        (0..rows.len())
            .map(|i| {
                let mut best = 0;
                for k in 1..self.bias.len() {
                    if logits[(i, k)] + self.bias[k] > logits[(i, best)] + self.bias[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Full-batch gradient descent with backtracking line search.
///
/// Stops when the gradient norm drops below `1e-6` or after `max_iters`.
pub fn train_probe<T: Scalar>(
    embeddings: &Mat<T>,
    labels: &[usize],
    train: &[usize],
    l2: f64,
    protocol: &EvalProtocol,
) -> Result<LinearProbe<T>> {
    if labels.len() != embeddings.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} embeddings",
            labels.len(),
            embeddings.rows()
        )));
    }
    let first = train
        .first()
        .map(|&i| labels[i])
        .ok_or_else(|| Error::InvalidArgument("empty training split".into()))?;
    if train.iter().all(|&i| labels[i] == first) {
        return Err(Error::InvalidArgument(
            "training split contains a single class".into(),
        ));
    }
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let standardizer = Standardizer::fit(embeddings, train);
    let x = standardizer.transform(embeddings, train);
    let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();

    let mut weights = Mat::zeros(x.cols(), num_classes);
    let mut bias = vec![T::zero(); num_classes];
    let max_step = T::of(protocol.probe_lr);
    let mut step = max_step;
    let mut current = probe_objective(&x, &y, &weights, &bias, l2);
    for _ in 0..protocol.probe_max_iters {
        let grad_sq = current
            .grad_weights
            .as_slice()
            .iter()
            .map(|&g| g * g)
            .sum::<T>()
            + current.grad_bias.iter().map(|&g| g * g).sum::<T>();
        if grad_sq.sqrt() < T::of(1e-6) {
            break;
        }
        let mut accepted = None;
        for _ in 0..40 {
            let w = weights
                .add(&current.grad_weights.scale(-step))
                .expect("probe shapes");
            let b: Vec<T> = bias
                .iter()
                .zip(&current.grad_bias)
                .map(|(&b, &g)| b - step * g)
                .collect();
            let trial = probe_objective(&x, &y, &w, &b, l2);
            if trial.value <= current.value - step * grad_sq / T::of(2.0) {
                accepted = Some((w, b, trial));
                break;
            }
            step /= T::of(2.0);
        }
        let Some((w, b, trial)) = accepted else {
            break;
        };
        weights = w;
        bias = b;
        current = trial;
        step = (step * T::of(2.0)).min(max_step);
    }
    Ok(LinearProbe {
        standardizer,
        weights,
        bias,
    })
}

/// Micro-averaged F1 for single-label predictions (equal to accuracy).
pub fn micro_f1(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("micro-F1 of an empty set".into()));
    }
    let tp = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    // Each instance carries one predicted label: TP + FP = number of instances.
    Ok(tp as f64 / predictions.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mean_f1: f64,
    /// Population standard deviation over repeats.
    pub std_f1: f64,
    pub per_repeat: Vec<f64>,
    pub chosen_l2: Vec<f64>,
}

/// Embeddings of the original, unaugmented graph.
pub fn embed_for_eval<T: Scalar>(params: &EncoderParams<T>, graph: &Graph<T>) -> Result<Mat<T>> {
    params.embed(graph)
}

pub fn evaluate_embeddings<T: Scalar>(
    embeddings: &Mat<T>,
    labels: &[usize],
    protocol: &EvalProtocol,
    seed: u64,
) -> Result<EvalSummary> {
    protocol.validate()?;
    let mut per_repeat = Vec::with_capacity(protocol.num_repeats);
    let mut chosen_l2 = Vec::with_capacity(protocol.num_repeats);
    for repeat in 0..protocol.num_repeats {
        let mut r = rng::stream(seed, Purpose::Probe, repeat as u64);
        let split = random_split(labels.len(), protocol, &mut r);
        let gold = |rows: &[usize]| rows.iter().map(|&i| labels[i]).collect::<Vec<_>>();
        let mut best: Option<(f64, f64, LinearProbe<T>)> = None;
        for &l2 in &protocol.l2_grid {
            let probe = train_probe(embeddings, labels, &split.train, l2, protocol)?;
            let val_score = if split.val.is_empty() {
                0.0
            } else {
                micro_f1(&probe.predict(embeddings, &split.val), &gold(&split.val))?
            };
            if best.as_ref().is_none_or(|(s, _, _)| val_score > *s) {
                best = Some((val_score, l2, probe));
            }
        }
        let (_, l2, probe) = best.expect("non-empty grid");
        per_repeat.push(micro_f1(
            &probe.predict(embeddings, &split.test),
            &gold(&split.test),
        )?);
        chosen_l2.push(l2);
    }
    let n = per_repeat.len() as f64;
    let mean_f1 = per_repeat.iter().sum::<f64>() / n;
    let std_f1 = (per_repeat
        .iter()
        .map(|v| (v - mean_f1).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EvalSummary {
        mean_f1,
        std_f1,
        per_repeat,
        chosen_l2,
    })
}

pub fn evaluate<T: Scalar>(
    params: &EncoderParams<T>,
    graph: &Graph<T>,
    protocol: &EvalProtocol,
    seed: u64,
) -> Result<EvalSummary> {
    let labels = graph
        .labels()
        .ok_or_else(|| Error::Dataset("evaluation needs node labels".into()))?;
    let embeddings = embed_for_eval(params, graph)?;
    evaluate_embeddings(&embeddings, labels, protocol, seed)
}
