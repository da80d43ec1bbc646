//! Seed-deterministic trial engine for CHSH experiments.
//!
//! Each setting pair gets its own `trials` emitted pairs. Per trial the
//! engine draws the source outcome, passes each wing through its BSC, erases
//! each wing independently and keeps the pair only on a coincidence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chsh::{chsh, CorrelationSet, JointDistribution, Outcome, SettingPair, SettingsQuad};
use crate::error::{check_probability, invalid, Error, Result};
use crate::models::{qm_joint, reference_lhv_model, ModelKind};
use crate::noise::{noisy_correlations, ErasureRates, NoiseQuad};
use crate::rng::{shard_ranges, StreamKey, TrialDraws};

// Random slots within a trial's block.
const SLOT_SOURCE: usize = 0;
const SLOT_FLIP_A: usize = 1;
const SLOT_FLIP_B: usize = 2;
const SLOT_DETECT_A: usize = 3;
const SLOT_DETECT_B: usize = 4;
const SLOT_CLASS_DETECT: usize = 5;

// Stream domains, offset by the setting pair index.
const RUN_STREAM: u64 = 0x100;
const SELECTION_STREAM: u64 = 0x200;

/// Tallies of the four outcome pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, a: Outcome, b: Outcome) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.n_pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.n_pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.n_mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.n_mm += 1,
        }
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        self.n_pp += other.n_pp;
        self.n_pm += other.n_pm;
        self.n_mp += other.n_mp;
        self.n_mm += other.n_mm;
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    /// Empirical correlation, `None` when nothing was counted.
    pub fn correlation(&self) -> Option<f64> {
        let m = self.total();
        if m == 0 {
            return None;
        }
        let agree = (self.n_pp + self.n_mm) as f64;
        let disagree = (self.n_pm + self.n_mp) as f64;
        Some((agree - disagree) / m as f64)
    }

    pub fn frequencies(&self) -> Option<JointDistribution> {
        let m = self.total();
        if m == 0 {
            return None;
        }
        let m = m as f64;
        Some(JointDistribution::new_unchecked(
            self.n_pp as f64 / m,
            self.n_pm as f64 / m,
            self.n_mp as f64 / m,
            self.n_mm as f64 / m,
        ))
    }
}

/// Standard error of the mean of `m` ±1 values with mean `e`.
pub fn standard_error(e: f64, m: u64) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    ((1.0 - e * e).max(0.0) / m as f64).sqrt()
}

/// Estimates for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub pair: SettingPair,
    pub emitted: u64,
    pub detected: u64,
    pub counts: OutcomeCounts,
    pub e: f64,
    pub se: f64,
}

impl PairStats {
    pub fn from_counts(pair: SettingPair, emitted: u64, counts: OutcomeCounts) -> Result<Self> {
        let e = counts
            .correlation()
            .ok_or(Error::NoCoincidences { pair: pair.label() })?;
        let detected = counts.total();
        Ok(Self {
            pair,
            emitted,
            detected,
            counts,
            e,
            se: standard_error(e, detected),
        })
    }

    /// `|Ê - expected| / se`; zero when both the deviation and se vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        z_score(self.e - expected, self.se)
    }
}

pub(crate) fn z_score(deviation: f64, se: f64) -> f64 {
    let d = deviation.abs();
    if d == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        d / se
    }
}

/// Monte Carlo estimates for a full CHSH run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub trials: u64,
    pub pairs: Vec<PairStats>,
    pub s: f64,
    pub se_s: f64,
}

impl RunStats {
    pub fn from_pairs(trials: u64, pairs: Vec<PairStats>) -> Result<Self> {
        let e: Vec<f64> = pairs.iter().map(|p| p.e).collect();
        let corr = CorrelationSet::new(e[0], e[1], e[2], e[3])?;
        let se_s = pairs.iter().map(|p| p.se * p.se).sum::<f64>().sqrt();
        Ok(Self {
            trials,
            s: chsh(&corr).value(),
            se_s,
            pairs,
        })
    }

    pub fn correlations(&self) -> CorrelationSet {
        CorrelationSet {
            e_ab: self.pairs[0].e,
            e_ad: self.pairs[1].e,
            e_cb: self.pairs[2].e,
            e_cd: self.pairs[3].e,
        }
    }

    pub fn pair(&self, pair: SettingPair) -> &PairStats {
        &self.pairs[pair.index()]
    }

    pub fn s_z_score(&self, expected: f64) -> f64 {
        z_score(self.s - expected, self.se_s)
    }
}

/// Parameters of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub trials: u64,
    pub seed: u64,
    pub shards: usize,
    pub settings: SettingsQuad,
    pub noise: Option<NoiseQuad>,
    pub erasure: Option<ErasureRates>,
    pub model: ModelKind,
}

impl RunConfig {
    pub fn new(model: ModelKind, settings: SettingsQuad, trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            shards: 1,
            settings,
            noise: None,
            erasure: None,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.shards == 0 {
            return Err(invalid("shards must be at least 1"));
        }
        // re-run the field constructors to reject hand-built invalid values
        SettingsQuad::new(self.settings.a, self.settings.b, self.settings.c, self.settings.d)?;
        if let Some(n) = self.noise {
            NoiseQuad::new(n.eps1.value(), n.eps2.value(), n.eps3.value(), n.eps4.value())?;
        }
        if let Some(e) = self.erasure {
            ErasureRates::new(e.delta_a, e.delta_b)?;
        }
        Ok(())
    }

    fn noise(&self) -> NoiseQuad {
        self.noise.unwrap_or_default()
    }

    fn erasure(&self) -> ErasureRates {
        self.erasure.unwrap_or_default()
    }
}

/// Detection probabilities of the two emitted classes in a selection run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub r1: f64,
    pub r2: f64,
}

impl ClassRates {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        Ok(Self {
            r1: check_probability("r1", r1)?,
            r2: check_probability("r2", r2)?,
        })
    }

    /// Correlation of the detected mixture: `(r₁ - r₂)/(r₁ + r₂)`.
    pub fn biased_correlation(&self) -> Result<f64> {
        let total = self.r1 + self.r2;
        if total == 0.0 {
            return Err(invalid("at least one class must be detectable"));
        }
        Ok((self.r1 - self.r2) / total)
    }
}

/// Per-wing noise and erasure applied to a source outcome pair.
#[derive(Debug, Clone, Copy)]
struct Channel {
    flip_a: f64,
    flip_b: f64,
    delta_a: f64,
    delta_b: f64,
}

impl Channel {
    fn for_pair(config: &RunConfig, pair: SettingPair) -> Self {
        let (ea, eb) = config.noise().rates(pair);
        let erasure = config.erasure();
        Self {
            flip_a: ea.value(),
            flip_b: eb.value(),
            delta_a: erasure.delta_a,
            delta_b: erasure.delta_b,
        }
    }

    fn apply(&self, draws: &TrialDraws, a: Outcome, b: Outcome) -> Option<(Outcome, Outcome)> {
        let a = if draws.bernoulli(SLOT_FLIP_A, self.flip_a) { -a } else { a };
        let b = if draws.bernoulli(SLOT_FLIP_B, self.flip_b) { -b } else { b };
        let seen_a = !draws.bernoulli(SLOT_DETECT_A, self.delta_a);
        let seen_b = !draws.bernoulli(SLOT_DETECT_B, self.delta_b);
        (seen_a && seen_b).then_some((a, b))
    }
}

/// Draws one outcome pair from a joint distribution.
fn sample_joint(joint: &JointDistribution, u: f64) -> (Outcome, Outcome) {
    let mut acc = joint.p_pp;
    if u < acc {
        return (Outcome::Plus, Outcome::Plus);
    }
    acc += joint.p_pm;
    if u < acc {
        return (Outcome::Plus, Outcome::Minus);
    }
    acc += joint.p_mp;
    if u < acc {
        return (Outcome::Minus, Outcome::Plus);
    }
    (Outcome::Minus, Outcome::Minus)
}

/// Runs `trial` over `0..trials`, split into `shards` contiguous ranges, and
/// sums the tallies in shard order.
fn tally<F>(key: StreamKey, trials: u64, shards: usize, trial: F) -> OutcomeCounts
where
    F: Fn(u64, &TrialDraws) -> Option<(Outcome, Outcome)> + Sync,
{
    let partial: Vec<OutcomeCounts> = shard_ranges(trials, shards)
        .into_par_iter()
        .map(|range| {
            let mut cursor = key.cursor(range.start);
            let mut counts = OutcomeCounts::default();
            for index in range {
                let draws = cursor.next_trial();
                if let Some((a, b)) = trial(index, &draws) {
                    counts.record(a, b);
                }
            }
            counts
        })
        .collect();
    partial.iter().fold(OutcomeCounts::default(), |mut acc, c| {
        acc.merge(c);
        acc
    })
}

/// Simulates the four setting pairs of a CHSH test.
pub fn run(config: &RunConfig) -> Result<RunStats> {
    config.validate()?;
    let lhv = reference_lhv_model();
    let mut pairs = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let (x, y) = config.settings.angles(pair);
        let channel = Channel::for_pair(config, pair);
        let key = StreamKey::new(config.seed, RUN_STREAM + pair.index() as u64);
        let counts = match config.model {
            ModelKind::LhvReference => tally(key, config.trials, config.shards, |_, draws| {
                let lambda = lhv.lambda_density.sample(draws.uniform(SLOT_SOURCE));
                let (a, b) = lhv.outcomes(x, y, lambda);
                channel.apply(draws, a, b)
            }),
            ModelKind::Qm => {
                let joint = qm_joint(x, y);
                tally(key, config.trials, config.shards, |_, draws| {
                    let (a, b) = sample_joint(&joint, draws.uniform(SLOT_SOURCE));
                    channel.apply(draws, a, b)
                })
            }
        };
        pairs.push(PairStats::from_counts(pair, config.trials, counts)?);
    }
    RunStats::from_pairs(config.trials, pairs)
}

/// Simulates a source emitting two classes alternately: class C₁ (even
/// trials) gives perfectly correlated outcomes, class C₂ (odd trials)
/// perfectly anti-correlated ones, at every setting. Each class is detected
/// with its own rate, on top of the configured noise and erasure. The model
/// and settings of `config` are not used.
pub fn run_with_selection(config: &RunConfig, rates: &ClassRates) -> Result<RunStats> {
    config.validate()?;
    ClassRates::new(rates.r1, rates.r2)?;
    let mut pairs = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let channel = Channel::for_pair(config, pair);
        let key = StreamKey::new(config.seed, SELECTION_STREAM + pair.index() as u64);
        let counts = tally(key, config.trials, config.shards, |index, draws| {
            let first_class = index % 2 == 0;
            let rate = if first_class { rates.r1 } else { rates.r2 };
            if !draws.bernoulli(SLOT_CLASS_DETECT, rate) {
                return None;
            }
            let a = Outcome::from_sign(0.5 - draws.uniform(SLOT_SOURCE));
            let b = if first_class { a } else { -a };
            channel.apply(draws, a, b)
        });
        pairs.push(PairStats::from_counts(pair, config.trials, counts)?);
    }
    RunStats::from_pairs(config.trials, pairs)
}

/// Correlations a run should converge to: the model's ideal correlations
/// scaled by the configured noise. Erasure is independent of the outcomes
/// and leaves them unchanged.
pub fn expected_correlations(config: &RunConfig, resolution: usize) -> Result<CorrelationSet> {
    let ideal = config.model.correlations(&config.settings, resolution)?;
    noisy_correlations(&ideal, &config.noise())
}

/// Correlations a selection run should converge to.
pub fn expected_selection_correlations(config: &RunConfig, rates: &ClassRates) -> Result<CorrelationSet> {
    let e = rates.biased_correlation()?;
    noisy_correlations(&CorrelationSet::new(e, e, e, e)?, &config.noise())
}
