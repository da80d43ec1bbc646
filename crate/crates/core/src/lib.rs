//! Analysis and simulation of Bell-CHSH tests under noisy, lossy and
//! unfairly sampled measurements.
//!
//! * [`chsh`]: joint distributions, correlations and the CHSH statistic.
//! * [`models`]: the reference local hidden-variable model and the
//!   entangled photon pair.
//! * [`noise`]: binary symmetric channels and erasure (detection) losses.
//! * [`coin`]: the classical coin-cutting apparatus with one faulty link.
//! * [`loophole`]: sampling probabilities and Δ-rescaled CHSH bounds.
//! * [`montecarlo`]: the seed-deterministic trial engine.

pub mod chsh;
pub mod coin;
pub mod error;
pub mod loophole;
pub mod models;
pub mod montecarlo;
pub mod noise;
pub mod rng;

pub use chsh::{
    chsh, correlation, validate_joint, ChshStatistic, CorrelationSet, JointDistribution, Outcome,
    SettingPair, SettingsQuad,
};
pub use error::{Error, Result};
pub use models::ModelKind;
pub use noise::{BscRate, ErasureRates, NoiseQuad};
