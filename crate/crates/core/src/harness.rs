//! Training loop and experiment runners.
//!
//! Every epoch: draw two views, encode both with shared weights, rank
//! candidate negatives (when a pool rebuild is due), sample negatives at the
//! agent's current percentage, back-propagate the contrastive loss into the
//! encoder, take an Adam step and let the agent look at the loss window.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentState, Decision, Variant};
use crate::augment;
use crate::config::TrainConfig;
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::loss::{EmbeddingPair, PairedSelection};
use crate::optim::{Adam, AdamConfig};
use crate::pools::{self, PoolPair};
use crate::probe::{self, EvalSummary};
use crate::rng::{self, Purpose};
use crate::scalar::Scalar;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

pub fn build_id() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub loss: f64,
    /// Percentage used for this epoch's negatives.
    pub kappa: u32,
    pub decision: Decision,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub build_id: String,
    pub seed: u64,
    pub xi: f64,
    pub final_kappa: u32,
    pub eval: EvalSummary,
    pub per_epoch: Vec<EpochRow>,
    pub config: TrainConfig,
}

/// Output of a run: the result record and the trained encoder.
pub struct TrainedRun<T> {
    pub result: RunResult,
    pub params: EncoderParams<T>,
}

pub fn train<T: Scalar>(config: &TrainConfig) -> Result<TrainedRun<T>> {
    config.validate()?;
    let graph = config.dataset.load::<T>()?;
    train_on_graph(config, &graph)
}

/// Encoder and per-epoch trace from the self-supervised stage.
pub struct Fit<T> {
    pub params: EncoderParams<T>,
    pub per_epoch: Vec<EpochRow>,
    pub final_kappa: u32,
}

/// The self-supervised training loop. Labels are never read.
pub fn fit<T: Scalar>(config: &TrainConfig, graph: &Graph<T>) -> Result<Fit<T>> {
    config.validate()?;
    if graph.num_nodes() < 2 {
        return Err(Error::Dataset("need at least 2 nodes".into()));
    }
    let seed = config.seed;
    let mut params = EncoderParams::<T>::init(
        graph.feature_dim(),
        config.hidden_dim,
        config.output_dim,
        &mut rng::stream(seed, Purpose::Init, 0),
    );
    let mut optimizer = Adam::new(
        AdamConfig::new(config.learning_rate, config.weight_decay),
        &params,
    );
    let mut agent_state = AgentState::new(&config.agent);
    let mut pools: Option<PoolPair<T>> = None;
    let mut per_epoch = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut epoch_rng = rng::stream(seed, Purpose::Epoch, epoch as u64);
        let (view1, view2) = augment::make_views(graph, &config.augment, &mut epoch_rng)?;
        let (k, cache_k) = params.forward(&view1.graph)?;
        let (m, cache_m) = params.forward(&view2.graph)?;
        let pair = EmbeddingPair::new(&k, &m)?;

        let kappa = agent_state.kappa();
        let selection = if kappa == 0 {
            PairedSelection::empty(graph.num_nodes())
        } else {
            let due = match config.pool_refresh_interval {
                0 => pools.is_none(),
                every => (epoch - 1) % every == 0 || pools.is_none(),
            };
            if due {
                pools = Some(pools::build_pool_pair(pair.similarities())?);
            }
            let p = pools.as_ref().expect("pools built above");
            let variant = config.agent.variant;
            PairedSelection {
                k_anchors: agent::select_negatives(&p.k_anchors, kappa, variant, &mut epoch_rng)?,
                m_anchors: agent::select_negatives(&p.m_anchors, kappa, variant, &mut epoch_rng)?,
            }
        };

        let lg = pair.loss_gradient(&selection, config.tau)?;
        let loss = lg.loss.as_f64();
        if !loss.is_finite() || !lg.d_k.is_finite() || !lg.d_m.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        let grads = params
            .backward(&cache_k, &lg.d_k)?
            .add(&params.backward(&cache_m, &lg.d_m)?)?;
        optimizer.step(&mut params, &grads)?;

        agent_state
            .record_loss(loss)
            .map_err(|_| Error::Divergence { epoch, loss })?;
        let decision = agent_state.decide(&config.agent, epoch);
        let wall_ms = if config.record_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        per_epoch.push(EpochRow {
            epoch,
            loss,
            kappa,
            decision,
            wall_ms,
        });
    }

    Ok(Fit {
        params,
        per_epoch,
        final_kappa: agent_state.kappa(),
    })
}

/// Trains on an already loaded graph, then runs the linear evaluation.
pub fn train_on_graph<T: Scalar>(config: &TrainConfig, graph: &Graph<T>) -> Result<TrainedRun<T>> {
    if graph.labels().is_none() {
        return Err(Error::Dataset(
            "training run needs labels for evaluation".into(),
        ));
    }
    let fitted = fit(config, graph)?;
    let eval = probe::evaluate(&fitted.params, graph, &config.protocol, config.seed)?;
    Ok(TrainedRun {
        result: RunResult {
            schema_version: RESULT_SCHEMA_VERSION,
            build_id: build_id(),
            seed: config.seed,
            xi: config.agent.xi,
            final_kappa: fitted.final_kappa,
            eval,
            per_epoch: fitted.per_epoch,
            config: config.clone(),
        },
        params: fitted.params,
    })
}

/// One row of a sweep or variant table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub key: String,
    pub mean_f1: f64,
    pub std_f1: f64,
}

pub struct Experiment {
    pub rows: Vec<TableRow>,
    pub runs: Vec<RunResult>,
}

fn run_all<T: Scalar>(configs: Vec<(String, TrainConfig)>, graph: &Graph<T>) -> Result<Experiment> {
    // Runs are independent; collect keeps input order.
    let runs: Vec<(String, RunResult)> = configs
        .into_par_iter()
        .map(|(key, cfg)| train_on_graph(&cfg, graph).map(|r| (key, r.result)))
        .collect::<Result<_>>()?;
    let rows = runs
        .iter()
        .map(|(key, r)| TableRow {
            key: key.clone(),
            mean_f1: r.eval.mean_f1,
            std_f1: r.eval.std_f1,
        })
        .collect();
    Ok(Experiment {
        rows,
        runs: runs.into_iter().map(|(_, r)| r).collect(),
    })
}

/// One run per maximum percentage. `κ_max = 0` trains without negatives.
pub fn sweep_percentages<T: Scalar>(
    config: &TrainConfig,
    kappa_max_list: &[u32],
) -> Result<Experiment> {
    if kappa_max_list.is_empty() {
        return Err(Error::Config("empty kappa_max list".into()));
    }
    if kappa_max_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "kappa_max list must be strictly increasing: {kappa_max_list:?}"
        )));
    }
    if let Some(&k) = kappa_max_list.iter().find(|&&k| k > 100) {
        return Err(Error::Config(format!("kappa_max {k} exceeds 100")));
    }
    config.validate()?;
    let graph = config.dataset.load::<T>()?;
    let configs = kappa_max_list
        .iter()
        .map(|&k| {
            let mut cfg = config.clone();
            cfg.agent.kappa_max = k;
            cfg.agent.kappa_init = cfg.agent.kappa_init.min(k);
            (k.to_string(), cfg)
        })
        .collect();
    run_all(configs, &graph)
}

/// One run per selection variant, identical seeds and hyperparameters.
pub fn compare_variants<T: Scalar>(
    config: &TrainConfig,
    variants: &[Variant],
) -> Result<Experiment> {
    if variants.is_empty() {
        return Err(Error::Config("no variants given".into()));
    }
    for (i, v) in variants.iter().enumerate() {
        if variants[..i].contains(v) {
            return Err(Error::Config(format!("variant `{v}` listed twice")));
        }
    }
    config.validate()?;
    let graph = config.dataset.load::<T>()?;
    let configs = variants
        .iter()
        .map(|&v| {
            let mut cfg = config.clone();
            cfg.agent.variant = v;
            (v.name().to_string(), cfg)
        })
        .collect();
    run_all(configs, &graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DatasetSource;
    use crate::graph::SbmSpec;

    fn tiny() -> TrainConfig {
        let mut c = TrainConfig::sbm_desk();
        c.epochs = 5;
        c.hidden_dim = 8;
        c.output_dim = 4;
        c.agent.window_half = 2;
        c.protocol.num_repeats = 2;
        c.protocol.probe_max_iters = 50;
        c.dataset = DatasetSource::Sbm(SbmSpec {
            blocks: 2,
            nodes_per_block: 10,
            p_in: 0.5,
            p_out: 0.05,
            feature_dim: 4,
            feature_signal: 1.0,
            seed: 1,
        });
        c
    }

    #[test]
    fn single_epoch_holds() {
        let mut c = tiny();
        c.epochs = 1;
        let r = train::<f64>(&c).unwrap().result;
        assert_eq!(r.per_epoch.len(), 1);
        assert_eq!(r.per_epoch[0].decision, Decision::Hold);
        assert_eq!(r.per_epoch[0].kappa, 10);
    }

    #[test]
    fn capped_kappa_is_constant() {
        let mut c = tiny();
        c.epochs = 12;
        c.agent.kappa_max = 10;
        let r = train::<f64>(&c).unwrap().result;
        assert!(r.per_epoch.iter().all(|row| row.kappa == 10));
    }

    #[test]
    fn deterministic_and_f32_capable() {
        let c = tiny();
        assert_eq!(
            train::<f64>(&c).unwrap().result,
            train::<f64>(&c).unwrap().result
        );
        let r = train::<f32>(&c).unwrap().result;
        assert!(r.per_epoch.iter().all(|row| row.loss.is_finite()));
    }

    #[test]
    fn build_once_refresh_setting_runs() {
        let mut c = tiny();
        c.pool_refresh_interval = 0;
        assert_eq!(train::<f64>(&c).unwrap().result.per_epoch.len(), 5);
    }

    #[test]
    fn runner_validation() {
        let c = tiny();
        assert!(sweep_percentages::<f64>(&c, &[10, 10]).is_err());
        assert!(sweep_percentages::<f64>(&c, &[20, 10]).is_err());
        assert!(sweep_percentages::<f64>(&c, &[]).is_err());
        assert!(sweep_percentages::<f64>(&c, &[101]).is_err());
        assert!(compare_variants::<f64>(&c, &[]).is_err());
        assert!(compare_variants::<f64>(&c, &[Variant::Css, Variant::Css]).is_err());
    }

    #[test]
    fn sweep_rows_follow_input_order() {
        let e = sweep_percentages::<f64>(&tiny(), &[0, 10, 50]).unwrap();
        let keys: Vec<_> = e.rows.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys, ["0", "10", "50"]);
        // No negatives: loss identically zero.
        assert!(e.runs[0]
            .per_epoch
            .iter()
            .all(|r| r.loss == 0.0 && r.kappa == 0));
    }

    #[test]
    fn easy_variant_on_three_nodes() {
        let mut c = tiny();
        c.agent.variant = Variant::Easy;
        let x = crate::matrix::Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]])
            .unwrap();
        let g = Graph::new([(0, 1), (1, 2)], x, None).unwrap();
        let f = fit::<f64>(&c, &g).unwrap();
        assert_eq!(f.per_epoch.len(), 5);
    }

    #[test]
    fn labels_do_not_influence_training() {
        let c = tiny();
        let labeled: Graph<f64> = c.dataset.load().unwrap();
        let unlabeled = Graph::new(labeled.edges(), labeled.features().clone(), None).unwrap();
        assert_eq!(
            fit(&c, &labeled).unwrap().params,
            fit(&c, &unlabeled).unwrap().params
        );
    }
}
