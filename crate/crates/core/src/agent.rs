//! Cumulative sample selection: per-epoch negative sampling at a percentage
//! `κ` of every pool, and the explore/exploit agent that grows `κ` when the
//! training loss stops improving.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::NegativeSelection;
use crate::pools::{NegPoolIndex, Pool, RankedCandidate};
use crate::scalar::Scalar;

/// Where negatives are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `κ%` of each of the easy, medium and hard pools.
    Css,
    /// Same total count, uniformly from all candidates.
    Random,
    Easy,
    Medium,
    Hard,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Css,
        Variant::Random,
        Variant::Easy,
        Variant::Medium,
        Variant::Hard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Css => "css",
            Variant::Random => "random",
            Variant::Easy => "easy",
            Variant::Medium => "medium",
            Variant::Hard => "hard",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Starting percentage.
    pub kappa_init: u32,
    pub kappa_max: u32,
    /// Epochs per half of the loss window.
    pub window_half: usize,
    /// Absolute improvement margin between the two window halves.
    pub xi: f64,
    pub variant: Variant,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            kappa_init: 10,
            kappa_max: 100,
            window_half: 10,
            xi: 0.01,
            variant: Variant::Css,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa_init > self.kappa_max || self.kappa_max > 100 {
            return Err(Error::Config(format!(
                "need kappa_init <= kappa_max <= 100, got {} and {}",
                self.kappa_init, self.kappa_max
            )));
        }
        if self.window_half == 0 {
            return Err(Error::Config("agent.window_half must be >= 1".into()));
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return Err(Error::Config(format!(
                "agent.xi = {} must be >= 0",
                self.xi
            )));
        }
        Ok(())
    }
}

/// `max(1, round_half_up(κ/100 · size))`, capped at `size`.
pub fn per_pool_count(kappa: u32, size: usize) -> usize {
    let rounded = (2 * kappa as usize * size + 100) / 200;
    rounded.max(1).min(size)
}

fn sample_from<T: Scalar, R: Rng + ?Sized>(
    items: &[RankedCandidate<T>],
    amount: usize,
    rng: &mut R,
    out: &mut Vec<RankedCandidate<T>>,
) {
    let amount = amount.min(items.len());
    out.extend(
        index::sample(rng, items.len(), amount)
            .into_iter()
            .map(|i| items[i]),
    );
}

/// Draws a fresh set of negatives for every anchor of `pools`.
pub fn select_negatives<T: Scalar, R: Rng + ?Sized>(
    pools: &NegPoolIndex<T>,
    kappa: u32,
    variant: Variant,
    rng: &mut R,
) -> Result<NegativeSelection> {
    if kappa == 0 || kappa > 100 {
        return Err(Error::InvalidArgument(format!(
            "kappa must be in 1..=100, got {kappa}"
        )));
    }
    const POOLS: [Pool; 3] = [Pool::Easy, Pool::Medium, Pool::Hard];
    let n = pools.num_anchors();
    let mut selection = NegativeSelection::empty(n);
    let mut picked = Vec::new();
    for anchor in 0..n {
        let sizes = POOLS.map(|p| pools.pool(anchor, p).len());
        if variant == Variant::Css && sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "empty pool with {} candidates per anchor",
                pools.num_candidates()
            )));
        }
        let counts = sizes.map(|s| if s == 0 { 0 } else { per_pool_count(kappa, s) });
        let total: usize = counts.iter().sum();

        picked.clear();
        match variant {
            Variant::Css => {
                for (p, count) in POOLS.into_iter().zip(counts) {
                    sample_from(pools.pool(anchor, p), count, rng, &mut picked);
                }
            }
            Variant::Random => sample_from(pools.ranking(anchor), total, rng, &mut picked),
            Variant::Easy | Variant::Medium | Variant::Hard => {
                let pool = match variant {
                    Variant::Easy => Pool::Easy,
                    Variant::Medium => Pool::Medium,
                    _ => Pool::Hard,
                };
                let items = pools.pool(anchor, pool);
                if items.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "{variant} pool is empty for anchor {anchor}"
                    )));
                }
                sample_from(items, total, rng, &mut picked);
            }
        }

        let intra = &mut selection.intra_negs[anchor];
        let inter = &mut selection.inter_negs[anchor];
        for r in &picked {
            if r.candidate.view == pools.anchor_view() {
                intra.push(r.candidate.node);
            } else {
                inter.push(r.candidate.node);
            }
        }
        intra.sort_unstable();
        inter.sort_unstable();
    }
    Ok(selection)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// Loss still improving (or `κ` saturated): keep `κ`.
    Exploit,
    /// Loss plateaued: `κ += 1`.
    Explore,
    /// Window not yet full.
    Hold,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Decision::Exploit => "exploit",
            Decision::Explore => "explore",
            Decision::Hold => "hold",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub epoch: usize,
    pub decision: Decision,
    /// `κ` after the decision.
    pub kappa: u32,
}

#[derive(Clone, Debug)]
pub struct AgentState {
    kappa: u32,
    window_len: usize,
    loss_window: VecDeque<f64>,
    decisions: Vec<DecisionRecord>,
}

impl AgentState {
    pub fn new(config: &AgentConfig) -> Self {
        let window_len = 2 * config.window_half;
        Self {
            kappa: config.kappa_init,
            window_len,
            loss_window: VecDeque::with_capacity(window_len + 1),
            decisions: Vec::new(),
        }
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn loss_window(&self) -> &VecDeque<f64> {
        &self.loss_window
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    /// Appends an epoch loss, evicting the oldest beyond `2n` entries.
    pub fn record_loss(&mut self, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(loss));
        }
        self.loss_window.push_back(loss);
        while self.loss_window.len() > self.window_len {
            self.loss_window.pop_front();
        }
        Ok(())
    }

    /// Compares the older and the recent half of the loss window.
    pub fn decide(&mut self, config: &AgentConfig, epoch: usize) -> Decision {
        let decision = if self.loss_window.len() < self.window_len {
            Decision::Hold
        } else {
            let half = config.window_half;
            let older: f64 = self.loss_window.iter().take(half).sum();
            let recent: f64 = self.loss_window.iter().skip(half).sum();
            if recent + config.xi < older {
                Decision::Exploit
            } else if self.kappa < config.kappa_max {
                self.kappa += 1;
                self.loss_window.clear();
                Decision::Explore
            } else {
                Decision::Exploit
            }
        };
        self.decisions.push(DecisionRecord {
            epoch,
            decision,
            kappa: self.kappa,
        });
        decision
    }
}
