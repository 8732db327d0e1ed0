//! Run configuration, stored as TOML.
//!
//! ```toml
//! version = 1
//! seed = 0
//! epochs = 300
//! tau = 0.4
//! learning_rate = 0.005
//! weight_decay = 1e-5
//! hidden_dim = 64
//! output_dim = 64
//! pool_refresh_interval = 1   # 0: build pools once, at epoch 1
//!
//! [augment]
//! edge_drop_prob_v1 = 0.3
//! # ...
//!
//! [agent]
//! kappa_init = 10
//! kappa_max = 50
//! window_half = 10
//! xi = 0.01
//! variant = "css"             # css | random | easy | medium | hard
//!
//! [protocol]                  # optional, defaults to a 10/10/80 split, 10 repeats
//!
//! [dataset]
//! kind = "sbm"                # or "files" with edges / features / labels paths
//! ```
//!
//! Relative dataset paths resolve against the directory of the config file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, Variant};
use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::graph::{self, DatasetPaths, Graph, SbmSpec};
use crate::probe::EvalProtocol;
use crate::scalar::Scalar;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    Files(DatasetPaths),
    Sbm(SbmSpec),
}

impl DatasetSource {
    pub fn load<T: Scalar>(&self) -> Result<Graph<T>> {
        match self {
            DatasetSource::Files(p) => {
                graph::load_dataset(&p.edges, &p.features, p.labels.as_deref())
            }
            DatasetSource::Sbm(spec) => graph::generate_sbm(spec),
        }
    }
}

fn default_refresh() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub version: u32,
    pub seed: u64,
    pub epochs: usize,
    pub tau: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub output_dim: usize,
    /// Epochs between pool rebuilds; `0` builds them once.
    #[serde(default = "default_refresh")]
    pub pool_refresh_interval: usize,
    /// Record real per-epoch wall-clock time. Off by default so that output
    /// files are byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
    pub augment: AugmentConfig,
    pub agent: AgentConfig,
    #[serde(default)]
    pub protocol: EvalProtocol,
    pub dataset: DatasetSource,
}

impl TrainConfig {
    /// Desk-scale stochastic block model run: 3 blocks of 100 nodes.
    pub fn sbm_desk() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            epochs: 300,
            tau: 0.4,
            learning_rate: 0.005,
            weight_decay: 1e-5,
            hidden_dim: 64,
            output_dim: 64,
            pool_refresh_interval: 1,
            record_timing: false,
            augment: AugmentConfig {
                edge_drop_prob_v1: 0.3,
                feat_mask_prob_v1: 0.2,
                edge_drop_prob_v2: 0.4,
                feat_mask_prob_v2: 0.3,
            },
            agent: AgentConfig {
                kappa_init: 10,
                kappa_max: 50,
                window_half: 10,
                xi: 0.01,
                variant: Variant::Css,
            },
            protocol: EvalProtocol::default(),
            dataset: DatasetSource::Sbm(SbmSpec {
                blocks: 3,
                nodes_per_block: 100,
                p_in: 0.3,
                p_out: 0.02,
                feature_dim: 16,
                feature_signal: 0.5,
                seed: 0,
            }),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (DatasetSource::Files(p), Some(base)) = (&mut config.dataset, path.parent()) {
            p.edges = base.join(&p.edges);
            p.features = base.join(&p.features);
            p.labels = p.labels.as_ref().map(|l| base.join(l));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} (supported: {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau = {} must be > 0", self.tau)));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(
                "learning_rate must be > 0, weight_decay >= 0".into(),
            ));
        }
        if self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::Config("encoder dimensions must be >= 1".into()));
        }
        self.augment.validate()?;
        self.agent.validate()?;
        self.protocol.validate()?;
        if let DatasetSource::Sbm(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = TrainConfig::sbm_desk();
        assert_eq!(TrainConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_invalid_values() {
        let mut c = TrainConfig::sbm_desk();
        c.tau = 0.0;
        assert!(TrainConfig::from_toml(&c.to_toml()).is_err());
        let mut c = TrainConfig::sbm_desk();
        c.epochs = 0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::sbm_desk();
        c.version = 2;
        assert!(c.validate().is_err());
        assert!(TrainConfig::from_toml("version = 1\nbogus = 3\n").is_err());
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = TrainConfig::sbm_desk();
        c.dataset = DatasetSource::Files(DatasetPaths {
            edges: "data/edges.tsv".into(),
            features: "data/features.csv".into(),
            labels: None,
        });
        let path = dir.path().join("run.toml");
        std::fs::write(&path, c.to_toml()).unwrap();
        let loaded = TrainConfig::load(&path).unwrap();
        match loaded.dataset {
            DatasetSource::Files(p) => assert_eq!(p.edges, dir.path().join("data/edges.tsv")),
            _ => unreachable!(),
        }
    }
}
