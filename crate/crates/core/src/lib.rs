//! Graph contrastive learning with cumulative negative sample selection.
//!
//! Two stochastic views of a graph are encoded by a shared two-layer GCN and
//! trained with a temperature-scaled contrastive loss. Each anchor's candidate
//! negatives are ranked by cosine similarity into easy, medium and hard pools;
//! every epoch a percentage `κ` of each pool is sampled, and an
//! explore/exploit agent raises `κ` whenever the loss plateaus. Learned
//! embeddings are scored with a linear probe.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod augment;
pub mod config;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod harness;
pub mod loss;
pub mod matrix;
pub mod optim;
pub mod pools;
pub mod probe;
pub mod report;
pub mod rng;
pub mod scalar;

pub use agent::{AgentConfig, AgentState, Decision, Variant};
pub use augment::AugmentConfig;
pub use config::{DatasetSource, TrainConfig};
pub use error::{Error, Result};
pub use graph::{DatasetPaths, SbmSpec};
pub use harness::{RunResult, TableRow};
pub use loss::{NegativeSelection, PairedSelection};
pub use probe::{EvalProtocol, EvalSummary};
pub use scalar::Scalar;

pub type Real = f64;
pub type Matrix = matrix::Mat<Real>;
pub type Graph = graph::Graph<Real>;
pub type AugmentedView = augment::AugmentedView<Real>;
pub type EncoderParams = encoder::EncoderParams<Real>;
pub type SimilarityMatrices = loss::SimilarityMatrices<Real>;
pub type NegPoolIndex = pools::NegPoolIndex<Real>;
