//! Noise-free joint distributions: a deterministic local hidden-variable
//! model and the polarization-entangled photon pair.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, TAU};

use serde::{Deserialize, Serialize};

use crate::chsh::{CorrelationSet, JointDistribution, Outcome, SettingPair, SettingsQuad};
use crate::error::{invalid, Result};

/// Default number of midpoint quadrature nodes for the λ average.
pub const DEFAULT_RESOLUTION: usize = 100_000;

/// A hidden-variable value `λ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HiddenVariable(f64);

impl HiddenVariable {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && (0.0..TAU).contains(&lambda) {
            Ok(Self(lambda))
        } else {
            Err(invalid(format!("hidden variable {lambda} is not in [0, 2π)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Distribution of the hidden variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaDensity {
    /// `ρ(λ) = 1/2π` on `[0, 2π)`.
    UniformContinuous,
    /// Equal weight on `n_tot` equispaced points `2πk/n_tot`.
    UniformDiscrete { n_tot: u64 },
}

impl LambdaDensity {
    /// Maps a uniform variate `u ∈ [0, 1)` to a draw of λ.
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            LambdaDensity::UniformContinuous => u * TAU,
            LambdaDensity::UniformDiscrete { n_tot } => {
                let k = ((u * n_tot as f64) as u64).min(n_tot - 1);
                k as f64 * TAU / n_tot as f64
            }
        }
    }
}

pub type OutcomeFn = fn(setting: f64, lambda: f64) -> Outcome;

/// A local model: each wing's outcome is a deterministic function of its own
/// setting and the shared λ.
#[derive(Debug, Clone, Copy)]
pub struct LhvModel {
    pub outcome_a: OutcomeFn,
    pub outcome_b: OutcomeFn,
    pub lambda_density: LambdaDensity,
}

impl LhvModel {
    pub fn with_density(self, lambda_density: LambdaDensity) -> Result<Self> {
        if let LambdaDensity::UniformDiscrete { n_tot: 0 } = lambda_density {
            return Err(invalid("discrete λ density needs at least one point"));
        }
        Ok(Self {
            lambda_density,
            ..self
        })
    }

    /// Outcome pair at fixed λ.
    pub fn outcomes(&self, a: f64, b: f64, lambda: f64) -> (Outcome, Outcome) {
        ((self.outcome_a)(a, lambda), (self.outcome_b)(b, lambda))
    }
}

fn reference_a(a: f64, lambda: f64) -> Outcome {
    Outcome::from_sign((2.0 * (lambda - a)).cos())
}

fn reference_b(b: f64, lambda: f64) -> Outcome {
    -Outcome::from_sign((2.0 * (lambda - b)).cos())
}

/// `A(a,λ) = sign cos 2(λ-a)`, `B(b,λ) = -sign cos 2(λ-b)`, λ uniform.
pub fn reference_lhv_model() -> LhvModel {
    LhvModel {
        outcome_a: reference_a,
        outcome_b: reference_b,
        lambda_density: LambdaDensity::UniformContinuous,
    }
}

/// Point-mass joint at a fixed λ. It factorizes into the two marginals.
pub fn lhv_point_joint(model: &LhvModel, a: f64, b: f64, lambda: f64) -> JointDistribution {
    let (oa, ob) = model.outcomes(a, b, lambda);
    let one = |x: Outcome, y: Outcome| if (oa, ob) == (x, y) { 1.0 } else { 0.0 };
    JointDistribution::new_unchecked(
        one(Outcome::Plus, Outcome::Plus),
        one(Outcome::Plus, Outcome::Minus),
        one(Outcome::Minus, Outcome::Plus),
        one(Outcome::Minus, Outcome::Minus),
    )
}

/// λ-averaged joint distribution. The continuous density uses a midpoint
/// rule with `resolution` nodes; a discrete density is summed exactly and
/// ignores `resolution`.
pub fn lhv_joint(model: &LhvModel, a: f64, b: f64, resolution: usize) -> Result<JointDistribution> {
    if resolution == 0 {
        return Err(invalid("quadrature resolution must be at least 1"));
    }
    let (nodes, step, offset) = match model.lambda_density {
        LambdaDensity::UniformContinuous => (resolution as u64, TAU / resolution as f64, 0.5),
        LambdaDensity::UniformDiscrete { n_tot } => (n_tot, TAU / n_tot as f64, 0.0),
    };
    let mut counts = [0u64; 4];
    for k in 0..nodes {
        let lambda = (k as f64 + offset) * step;
        let (oa, ob) = model.outcomes(a, b, lambda);
        let cell = match (oa, ob) {
            (Outcome::Plus, Outcome::Plus) => 0,
            (Outcome::Plus, Outcome::Minus) => 1,
            (Outcome::Minus, Outcome::Plus) => 2,
            (Outcome::Minus, Outcome::Minus) => 3,
        };
        counts[cell] += 1;
    }
    let n = nodes as f64;
    Ok(JointDistribution::new_unchecked(
        counts[0] as f64 / n,
        counts[1] as f64 / n,
        counts[2] as f64 / n,
        counts[3] as f64 / n,
    ))
}

/// Joint statistics of a polarization-entangled pair:
/// `E(a,b) = cos 2(a-b)`.
pub fn qm_joint(a: f64, b: f64) -> JointDistribution {
    let delta = a - b;
    let same = 0.5 * delta.cos().powi(2);
    let diff = 0.5 * delta.sin().powi(2);
    JointDistribution::new_unchecked(same, diff, diff, same)
}

/// Settings at which the entangled pair reaches `S = 2√2`.
pub fn optimal_qm_settings() -> SettingsQuad {
    SettingsQuad {
        a: 0.0,
        b: FRAC_PI_8,
        c: FRAC_PI_4,
        d: 3.0 * FRAC_PI_8,
    }
}

/// Which source produces the pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lhv-ref")]
    LhvReference,
    #[serde(rename = "qm")]
    Qm,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::LhvReference => "lhv-ref",
            ModelKind::Qm => "qm",
        }
    }

    /// Noise-free joint for one setting pair.
    pub fn joint(self, settings: &SettingsQuad, pair: SettingPair, resolution: usize) -> Result<JointDistribution> {
        let (x, y) = settings.angles(pair);
        match self {
            ModelKind::LhvReference => lhv_joint(&reference_lhv_model(), x, y, resolution),
            ModelKind::Qm => Ok(qm_joint(x, y)),
        }
    }

    pub fn joints(self, settings: &SettingsQuad, resolution: usize) -> Result<[JointDistribution; 4]> {
        let mut out = [JointDistribution::new_unchecked(0.25, 0.25, 0.25, 0.25); 4];
        for pair in SettingPair::ALL {
            out[pair.index()] = self.joint(settings, pair, resolution)?;
        }
        Ok(out)
    }

    pub fn correlations(self, settings: &SettingsQuad, resolution: usize) -> Result<CorrelationSet> {
        let joints = self.joints(settings, resolution)?;
        let mut e = [0.0; 4];
        for (slot, j) in e.iter_mut().zip(&joints) {
            *slot = crate::chsh::correlation(j)?;
        }
        CorrelationSet::from_array(e)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lhv-ref" => Ok(ModelKind::LhvReference),
            "qm" => Ok(ModelKind::Qm),
            other => Err(invalid(format!("unknown model `{other}` (expected lhv-ref or qm)"))),
        }
    }
}
