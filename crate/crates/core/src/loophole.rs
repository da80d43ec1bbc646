//! Sampling loopholes: class-balanced detection probabilities, the
//! Δ-rescaled CHSH value, and the chance that two samples share their
//! hidden variables.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::chsh::{ChshStatistic, CorrelationSet, NORMALIZATION_TOLERANCE};
use crate::error::{invalid, Error, Result};

/// Natural log of the binomial coefficient `C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_choose({n}, {k})");
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `N` emitted pairs split evenly into two classes, of which `N φ` are
/// detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    n_pairs: u64,
    detected: u64,
}

impl SampleSpec {
    /// `N φ` must be an even integer within `1e-9`.
    pub fn new(n_pairs: u64, detected_fraction: f64) -> Result<Self> {
        if !(detected_fraction > 0.0 && detected_fraction <= 1.0) {
            return Err(invalid(format!(
                "detected fraction {detected_fraction} is not in (0, 1]"
            )));
        }
        let exact = n_pairs as f64 * detected_fraction;
        let detected = exact.round();
        if (exact - detected).abs() > 1e-9 {
            return Err(invalid(format!(
                "N * phi = {exact} is not an integer"
            )));
        }
        Self::from_detected(n_pairs, detected as u64)
    }

    pub fn from_detected(n_pairs: u64, detected: u64) -> Result<Self> {
        if n_pairs == 0 || !n_pairs.is_multiple_of(2) {
            return Err(invalid(format!("N = {n_pairs} must be positive and even")));
        }
        if detected == 0 || !detected.is_multiple_of(2) {
            return Err(invalid(format!(
                "detected count {detected} must be positive and even"
            )));
        }
        if detected > n_pairs {
            return Err(invalid(format!(
                "detected count {detected} exceeds N = {n_pairs}"
            )));
        }
        Ok(Self { n_pairs, detected })
    }

    pub fn n_pairs(&self) -> u64 {
        self.n_pairs
    }

    pub fn detected(&self) -> u64 {
        self.detected
    }

    pub fn detected_fraction(&self) -> f64 {
        self.detected as f64 / self.n_pairs as f64
    }

    pub fn class_size(&self) -> u64 {
        self.n_pairs / 2
    }

    pub fn detected_per_class(&self) -> u64 {
        self.detected / 2
    }
}

/// `ln[C(N/2, Nφ/2)² (½)^{Nφ}]`, evaluated as the formula is written.
///
/// This is not a normalized sampling probability: it equals 1 at
/// `N = 4, φ = ½`, `(½)^N` at `φ = 1`, and exceeds 1 for large `N` at
/// small `φ`. See
/// [`hypergeometric_balanced_log_prob`] for the self-consistent version.
pub fn equilibrate_sampling_log_prob(spec: &SampleSpec) -> f64 {
    2.0 * ln_choose(spec.class_size(), spec.detected_per_class()) - spec.detected() as f64 * LN_2
}

/// Log-probability that a uniformly random `Nφ`-subset of the `N` pairs
/// holds equally many members of each class:
/// `ln[C(N/2, Nφ/2)² / C(N, Nφ)]`.
pub fn hypergeometric_balanced_log_prob(spec: &SampleSpec) -> f64 {
    (2.0 * ln_choose(spec.class_size(), spec.detected_per_class())
        - ln_choose(spec.n_pairs(), spec.detected()))
    .min(0.0)
}

/// Free rescaling parameters `Δ₁..Δ₄` of the detected correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaQuad {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl DeltaQuad {
    pub fn new(d1: f64, d2: f64, d3: f64, d4: f64) -> Self {
        Self { d1, d2, d3, d4 }
    }

    pub fn ones() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0)
    }

    pub fn values(&self) -> [f64; 4] {
        [self.d1, self.d2, self.d3, self.d4]
    }

    /// Checks `|Δᵢ Eᵢ| ≤ 1` for each index. A zero correlation admits any
    /// finite Δ since the product vanishes.
    pub fn check(&self, corr: &CorrelationSet) -> Result<()> {
        for (i, (d, e)) in self.values().into_iter().zip(corr.values()).enumerate() {
            if !d.is_finite() || (d * e).abs() > 1.0 + NORMALIZATION_TOLERANCE {
                return Err(Error::DeltaOutOfRange {
                    index: i + 1,
                    delta: d,
                    correlation: e,
                });
            }
        }
        Ok(())
    }
}

/// `|Δ₁E(a,b) - Δ₂E(a,d)| + |Δ₃E(c,b) + Δ₄E(c,d)|`.
pub fn s_delta(corr: &CorrelationSet, deltas: &DeltaQuad) -> Result<ChshStatistic> {
    deltas.check(corr)?;
    let t = |d: f64, e: f64| (d * e).clamp(-1.0, 1.0);
    let first = t(deltas.d1, corr.e_ab) - t(deltas.d2, corr.e_ad);
    let second = t(deltas.d3, corr.e_cb) + t(deltas.d4, corr.e_cd);
    Ok(ChshStatistic::from_value(first.abs() + second.abs()))
}

/// Attainable range of [`s_delta`] over admissible Δ, with a Δ that
/// reaches the upper end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRange {
    pub low: f64,
    pub high: f64,
    pub witness: DeltaQuad,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn of_term(e: f64) -> Self {
        if e == 0.0 {
            Interval { lo: 0.0, hi: 0.0 }
        } else {
            Interval { lo: -1.0, hi: 1.0 }
        }
    }

    fn abs_range(self) -> (f64, f64) {
        let low = if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        };
        (low, self.lo.abs().max(self.hi.abs()))
    }

    /// True when `hi` has the larger magnitude.
    fn upper_dominates(self) -> bool {
        self.hi >= -self.lo
    }
}

/// Interval arithmetic on `|t₁ - t₂| + |t₃ + t₄|` with `tᵢ = ΔᵢEᵢ`, where
/// `tᵢ ∈ [-1, 1]` for `Eᵢ ≠ 0` and `tᵢ = 0` otherwise.
pub fn s_delta_range(corr: &CorrelationSet) -> DeltaRange {
    let e = corr.values();
    let t = e.map(Interval::of_term);
    let diff = Interval {
        lo: t[0].lo - t[1].hi,
        hi: t[0].hi - t[1].lo,
    };
    let sum = Interval {
        lo: t[2].lo + t[3].lo,
        hi: t[2].hi + t[3].hi,
    };
    let (diff_low, diff_high) = diff.abs_range();
    let (sum_low, sum_high) = sum.abs_range();

    let chosen = if diff.upper_dominates() {
        [t[0].hi, t[1].lo]
    } else {
        [t[0].lo, t[1].hi]
    };
    let chosen_sum = if sum.upper_dominates() {
        [t[2].hi, t[3].hi]
    } else {
        [t[2].lo, t[3].lo]
    };
    let targets = [chosen[0], chosen[1], chosen_sum[0], chosen_sum[1]];
    let delta = |i: usize| if e[i] == 0.0 { 0.0 } else { targets[i] / e[i] };

    DeltaRange {
        low: diff_low + sum_low,
        high: diff_high + sum_high,
        witness: DeltaQuad::new(delta(0), delta(1), delta(2), delta(3)),
    }
}

/// Two samples of `n` hidden-variable values drawn from `n_tot` possible
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapSpec {
    n: u64,
    n_tot: u64,
}

impl OverlapSpec {
    /// Fails when `n > n_tot`: the overlap probability is then exactly 0
    /// and has no finite logarithm.
    pub fn new(n: u64, n_tot: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample size n must be at least 1"));
        }
        if n > n_tot {
            return Err(invalid(format!(
                "n = {n} exceeds N_TOT = {n_tot}: overlap probability is zero"
            )));
        }
        Ok(Self { n, n_tot })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_tot(&self) -> u64 {
        self.n_tot
    }
}

// Above this many factors the product is evaluated through log-gamma.
const OVERLAP_DIRECT_LIMIT: u64 = 10_000_000;

/// `ln ∏_{i=0}^{n-1} (n-i)/(N_TOT-i)`.
pub fn overlap_log_prob(spec: &OverlapSpec) -> f64 {
    let (n, n_tot) = (spec.n, spec.n_tot);
    if n == n_tot {
        return 0.0;
    }
    if n > OVERLAP_DIRECT_LIMIT {
        return ln_factorial(n) + ln_factorial(n_tot - n) - ln_factorial(n_tot);
    }
    (0..n)
        .map(|i| ((n - i) as f64).ln() - ((n_tot - i) as f64).ln())
        .sum()
}

/// [`overlap_log_prob`] over a strictly ascending list of `N_TOT` values.
/// The result is strictly decreasing.
pub fn overlap_limit_scan(n: u64, n_tot_values: &[u64]) -> Result<Vec<f64>> {
    if n_tot_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("N_TOT values must be strictly ascending"));
    }
    n_tot_values
        .iter()
        .map(|&n_tot| OverlapSpec::new(n, n_tot).map(|s| overlap_log_prob(&s)))
        .collect()
}
