//! Binary symmetric channel noise on measurement outcomes and the erasure
//! model of imperfect detection.

use serde::{Deserialize, Serialize};

use crate::chsh::{ChshStatistic, CorrelationSet, JointDistribution, SettingPair};
use crate::error::{check_probability, invalid, Error, Result};

/// Flip probability of a binary symmetric channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BscRate(f64);

impl BscRate {
    pub const NOISELESS: BscRate = BscRate(0.0);

    pub fn new(epsilon: f64) -> Result<Self> {
        check_probability("epsilon", epsilon).map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - 2ε`, the factor by which the channel scales a correlation.
    pub fn contrast(self) -> f64 {
        1.0 - 2.0 * self.0
    }

    /// Rate of two channels in cascade: `ε₁ + ε₂ - 2ε₁ε₂`.
    pub fn cascade(self, other: BscRate) -> BscRate {
        BscRate((self.0 + other.0 - 2.0 * self.0 * other.0).clamp(0.0, 1.0))
    }
}

/// Flip rates per (wing, setting) channel: ε₁ wing I at `a`, ε₂ wing II at
/// `b`, ε₃ wing I at `c`, ε₄ wing II at `d`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseQuad {
    pub eps1: BscRate,
    pub eps2: BscRate,
    pub eps3: BscRate,
    pub eps4: BscRate,
}

impl NoiseQuad {
    pub fn new(eps1: f64, eps2: f64, eps3: f64, eps4: f64) -> Result<Self> {
        Ok(Self {
            eps1: BscRate::new(eps1)?,
            eps2: BscRate::new(eps2)?,
            eps3: BscRate::new(eps3)?,
            eps4: BscRate::new(eps4)?,
        })
    }

    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new(eps, eps, eps, eps)
    }

    /// `(wing I rate, wing II rate)` seen by a setting pair.
    pub fn rates(&self, pair: SettingPair) -> (BscRate, BscRate) {
        let a = if pair.wing_a_first() { self.eps1 } else { self.eps3 };
        let b = if pair.wing_b_first() { self.eps2 } else { self.eps4 };
        (a, b)
    }
}

/// Non-detection probabilities of the two wings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErasureRates {
    pub delta_a: f64,
    pub delta_b: f64,
}

impl ErasureRates {
    pub fn new(delta_a: f64, delta_b: f64) -> Result<Self> {
        Ok(Self {
            delta_a: check_probability("delta_a", delta_a)?,
            delta_b: check_probability("delta_b", delta_b)?,
        })
    }
}

/// Probability of observing `A` after the channel: `P(A)(1-2ε) + ε`.
pub fn bsc_marginal(p: f64, eps: BscRate) -> Result<f64> {
    let p = check_probability("p", p)?;
    Ok((p * eps.contrast() + eps.value()).clamp(0.0, 1.0))
}

/// Passes each wing of a joint through its own BSC.
pub fn bsc_joint(joint: &JointDistribution, eps_a: BscRate, eps_b: BscRate) -> Result<JointDistribution> {
    let j = crate::chsh::validate_joint(*joint)?;
    let (ea, eb) = (eps_a.value(), eps_b.value());
    let (ka, kb) = (1.0 - ea, 1.0 - eb);
    // Each output cell mixes the source cell (kept), its wing-flipped
    // neighbours, and the doubly flipped cell.
    let cell = |same: f64, flip_a: f64, flip_b: f64, flip_both: f64| {
        same * ka * kb + flip_a * ea * kb + flip_b * ka * eb + flip_both * ea * eb
    };
    crate::chsh::validate_joint(JointDistribution::new_unchecked(
        cell(j.p_pp, j.p_mp, j.p_pm, j.p_mm),
        cell(j.p_pm, j.p_mm, j.p_pp, j.p_mp),
        cell(j.p_mp, j.p_pp, j.p_mm, j.p_pm),
        cell(j.p_mm, j.p_pm, j.p_mp, j.p_pp),
    ))
}

/// `(1-2ε_a)(1-2ε_b) E`.
pub fn noisy_correlation(e: f64, eps_a: BscRate, eps_b: BscRate) -> Result<f64> {
    if !e.is_finite() || e.abs() > 1.0 + crate::chsh::NORMALIZATION_TOLERANCE {
        return Err(invalid(format!("correlation {e} is not in [-1, 1]")));
    }
    Ok(eps_a.contrast() * eps_b.contrast() * e)
}

/// Correlations after the noise quad has acted on each setting pair.
pub fn noisy_correlations(corr: &CorrelationSet, noise: &NoiseQuad) -> Result<CorrelationSet> {
    let mut out = [0.0; 4];
    for pair in SettingPair::ALL {
        let (ea, eb) = noise.rates(pair);
        out[pair.index()] = noisy_correlation(corr.get(pair), ea, eb)?;
    }
    CorrelationSet::from_array(out)
}

/// Noisy CHSH value, with ε₁ factoring the first term and ε₃ the second:
///
/// `|(1-2ε₁)[(1-2ε₂)E(a,b) - (1-2ε₄)E(a,d)]| + |(1-2ε₃)[(1-2ε₂)E(c,b) + (1-2ε₄)E(c,d)]|`
pub fn s_epsilon(corr: &CorrelationSet, noise: &NoiseQuad) -> ChshStatistic {
    let (k1, k2, k3, k4) = (
        noise.eps1.contrast(),
        noise.eps2.contrast(),
        noise.eps3.contrast(),
        noise.eps4.contrast(),
    );
    let first = k1 * (k2 * corr.e_ab - k4 * corr.e_ad);
    let second = k3 * (k2 * corr.e_cb + k4 * corr.e_cd);
    ChshStatistic::from_value(first.abs() + second.abs())
}

/// Equal flip rate at which a violation `s_ideal` is scaled down to the
/// local bound: the root of `(1-2ε)² s_ideal = 2` in `[0, ½]`.
pub fn critical_epsilon(s_ideal: ChshStatistic) -> Result<BscRate> {
    let s = s_ideal.value();
    if s <= ChshStatistic::LOCAL_BOUND {
        return Err(Error::NoViolation { s });
    }
    BscRate::new((1.0 - (2.0 / s).sqrt()) / 2.0)
}

/// Builds a CHSH value from a raw number, e.g. a command-line input.
pub fn chsh_value(s: f64) -> Result<ChshStatistic> {
    if s.is_finite() && (0.0..=ChshStatistic::ALGEBRAIC_MAX).contains(&s) {
        Ok(ChshStatistic::from_value(s))
    } else {
        Err(invalid(format!("CHSH value {s} is not in [0, 4]")))
    }
}

/// Fraction of pairs seen by both wings: `(1-δ_a)(1-δ_b)`.
pub fn joint_detection_prob(rates: &ErasureRates) -> f64 {
    (1.0 - rates.delta_a) * (1.0 - rates.delta_b)
}
