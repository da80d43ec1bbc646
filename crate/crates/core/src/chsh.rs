//! Exact probability and correlation arithmetic for two-outcome measurements.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Normalization tolerance for joint distributions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A binary measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    /// `+` for non-negative values, `-` otherwise. Zero maps to `+`.
    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn is_plus(self) -> bool {
        self == Outcome::Plus
    }
}

impl Neg for Outcome {
    type Output = Outcome;

    fn neg(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        })
    }
}

/// Probabilities of the four outcome pairs for one setting pair, in the
/// order `(++, +-, -+, --)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointDistribution {
    /// Builds and validates a distribution.
    pub fn new(p_pp: f64, p_pm: f64, p_mp: f64, p_mm: f64) -> Result<Self> {
        validate_joint(Self::new_unchecked(p_pp, p_pm, p_mp, p_mm))
    }

    pub(crate) const fn new_unchecked(p_pp: f64, p_pm: f64, p_mp: f64, p_mm: f64) -> Self {
        Self {
            p_pp,
            p_pm,
            p_mp,
            p_mm,
        }
    }

    pub fn cells(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    /// Probability of the outcome pair `(a, b)`.
    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.p_pp,
            (Outcome::Plus, Outcome::Minus) => self.p_pm,
            (Outcome::Minus, Outcome::Plus) => self.p_mp,
            (Outcome::Minus, Outcome::Minus) => self.p_mm,
        }
    }

    /// Marginal probability of `+` on wing I.
    pub fn marginal_a_plus(&self) -> f64 {
        self.p_pp + self.p_pm
    }

    /// Marginal probability of `+` on wing II.
    pub fn marginal_b_plus(&self) -> f64 {
        self.p_pp + self.p_mp
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(invalid(format!("mixing weight {weight} is not in [0, 1]")));
        }
        let w = weight;
        let v = 1.0 - weight;
        JointDistribution::new(
            w * self.p_pp + v * other.p_pp,
            w * self.p_pm + v * other.p_pm,
            w * self.p_mp + v * other.p_mp,
            w * self.p_mm + v * other.p_mm,
        )
    }
}

/// Returns the distribution unchanged if it is non-negative and normalized.
pub fn validate_joint(joint: JointDistribution) -> Result<JointDistribution> {
    const NAMES: [&str; 4] = ["++", "+-", "-+", "--"];
    for (name, p) in NAMES.iter().zip(joint.cells()) {
        if p.is_nan() || p < 0.0 {
            return Err(Error::NegativeProbability {
                cell: name,
                value: p,
            });
        }
    }
    let sum: f64 = joint.cells().iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NonNormalized { sum });
    }
    Ok(joint)
}

/// `P(++) + P(--) - P(+-) - P(-+)`.
pub fn correlation(joint: &JointDistribution) -> Result<f64> {
    let j = validate_joint(*joint)?;
    Ok(((j.p_pp + j.p_mm) - (j.p_pm + j.p_mp)).clamp(-1.0, 1.0))
}

/// Analyzer angles (radians) for the two wings: `a`, `c` on wing I and
/// `b`, `d` on wing II. Stored reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingsQuad {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SettingsQuad {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !x.is_finite() {
                return Err(invalid(format!("angle {name} = {x} is not finite")));
            }
        }
        Ok(Self {
            a: reduce_angle(a),
            b: reduce_angle(b),
            c: reduce_angle(c),
            d: reduce_angle(d),
        })
    }

    pub fn from_degrees(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(a.to_radians(), b.to_radians(), c.to_radians(), d.to_radians())
    }

    /// `(wing I angle, wing II angle)` for a setting pair.
    pub fn angles(&self, pair: SettingPair) -> (f64, f64) {
        match pair {
            SettingPair::AB => (self.a, self.b),
            SettingPair::AD => (self.a, self.d),
            SettingPair::CB => (self.c, self.b),
            SettingPair::CD => (self.c, self.d),
        }
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// The four setting pairs of a CHSH test, in the order they enter S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingPair {
    #[serde(rename = "ab")]
    AB,
    #[serde(rename = "ad")]
    AD,
    #[serde(rename = "cb")]
    CB,
    #[serde(rename = "cd")]
    CD,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::AD,
        SettingPair::CB,
        SettingPair::CD,
    ];

    pub fn index(self) -> usize {
        match self {
            SettingPair::AB => 0,
            SettingPair::AD => 1,
            SettingPair::CB => 2,
            SettingPair::CD => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SettingPair::AB => "ab",
            SettingPair::AD => "ad",
            SettingPair::CB => "cb",
            SettingPair::CD => "cd",
        }
    }

    /// True when wing I uses setting `a` (otherwise `c`).
    pub fn wing_a_first(self) -> bool {
        matches!(self, SettingPair::AB | SettingPair::AD)
    }

    /// True when wing II uses setting `b` (otherwise `d`).
    pub fn wing_b_first(self) -> bool {
        matches!(self, SettingPair::AB | SettingPair::CB)
    }
}

/// The four correlations `E(a,b), E(a,d), E(c,b), E(c,d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub e_ab: f64,
    pub e_ad: f64,
    pub e_cb: f64,
    pub e_cd: f64,
}

impl CorrelationSet {
    pub fn new(e_ab: f64, e_ad: f64, e_cb: f64, e_cd: f64) -> Result<Self> {
        let set = Self {
            e_ab,
            e_ad,
            e_cb,
            e_cd,
        };
        for (pair, e) in SettingPair::ALL.iter().zip(set.values()) {
            if !e.is_finite() || e.abs() > 1.0 + NORMALIZATION_TOLERANCE {
                return Err(invalid(format!(
                    "correlation E({}) = {e} is not in [-1, 1]",
                    pair.label()
                )));
            }
        }
        Ok(set)
    }

    pub fn from_array(values: [f64; 4]) -> Result<Self> {
        Self::new(values[0], values[1], values[2], values[3])
    }

    pub fn values(&self) -> [f64; 4] {
        [self.e_ab, self.e_ad, self.e_cb, self.e_cd]
    }

    pub fn get(&self, pair: SettingPair) -> f64 {
        self.values()[pair.index()]
    }
}

/// A CHSH value `S`, bounded by the algebraic maximum 4.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChshStatistic(f64);

impl ChshStatistic {
    pub const LOCAL_BOUND: f64 = 2.0;
    pub const ALGEBRAIC_MAX: f64 = 4.0;

    pub(crate) fn from_value(s: f64) -> Self {
        debug_assert!(
            (0.0..=Self::ALGEBRAIC_MAX + 1e-9).contains(&s),
            "CHSH value {s} outside [0, 4]"
        );
        ChshStatistic(s)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn violates_local_bound(self) -> bool {
        self.0 > Self::LOCAL_BOUND
    }
}

impl fmt::Display for ChshStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `S = |E(a,b) - E(a,d)| + |E(c,b) + E(c,d)|`.
pub fn chsh(corr: &CorrelationSet) -> ChshStatistic {
    ChshStatistic::from_value((corr.e_ab - corr.e_ad).abs() + (corr.e_cb + corr.e_cd).abs())
}
