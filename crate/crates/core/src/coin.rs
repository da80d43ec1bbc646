//! The coin-cutting apparatus: a classical source, four cameras, four
//! concordance counters, and a single faulty link that drops the `A(a)`
//! signal on its way to stage `L2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chsh::{chsh, correlation, ChshStatistic, CorrelationSet, JointDistribution, Outcome, SettingPair};
use crate::error::{check_probability, invalid, Result};
use crate::montecarlo::{standard_error, z_score, OutcomeCounts};
use crate::rng::{shard_ranges, StreamKey, TrialDraws};

const COIN_STREAM: u64 = 0x300;
const SLOT_ORIENTATION: usize = 0;
const SLOT_DROP: usize = 1;

/// Identifier of the only noisy link in the apparatus.
pub const FAULTY_LINK: &str = "A(a)→L2";

/// Stage labels, in setting-pair order `(a,b), (a,d), (c,b), (c,d)`.
pub const STAGES: [&str; 4] = ["L1", "L2", "L3", "L4"];

/// Drop probability of the faulty link. A `+` carried on it falls to `-`
/// with probability `epsilon`; a `-` is never altered.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultSpec {
    pub epsilon: f64,
}

impl FaultSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_probability("epsilon", epsilon).map(|epsilon| Self { epsilon })
    }

    pub fn faulty_link(&self) -> &'static str {
        FAULTY_LINK
    }
}

/// Signals of one cut coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinTrial {
    /// `+` when the head half goes to bucket I.
    pub orientation: Outcome,
    /// Camera signals `A(a), A(c), B(b), B(d)`.
    pub cameras: [Outcome; 4],
    /// Wing I and wing II inputs as received by `L1..L4`.
    pub stage_inputs: [(Outcome, Outcome); 4],
}

/// Camera signal on wing II for a given orientation. Both cameras over
/// bucket II see the cross half exactly when the head went to bucket I.
pub fn wing_two_signal(orientation: Outcome, _setting: SettingPair) -> Outcome {
    orientation
}

fn wing_one_signal(orientation: Outcome) -> Outcome {
    orientation
}

fn build_trial(draws: &TrialDraws, fault: &FaultSpec) -> CoinTrial {
    let orientation = if draws.bernoulli(SLOT_ORIENTATION, 0.5) {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let a = wing_one_signal(orientation);
    let c = wing_one_signal(orientation);
    let b = wing_two_signal(orientation, SettingPair::AB);
    let d = wing_two_signal(orientation, SettingPair::AD);
    let dropped = a.is_plus() && draws.bernoulli(SLOT_DROP, fault.epsilon);
    let a_to_l2 = if dropped { Outcome::Minus } else { a };
    CoinTrial {
        orientation,
        cameras: [a, c, b, d],
        stage_inputs: [(a, b), (a_to_l2, d), (c, b), (c, d)],
    }
}

/// A single trial as a pure function of `(seed, index)`.
pub fn coin_trial(seed: u64, index: u64, fault: &FaultSpec) -> CoinTrial {
    build_trial(&StreamKey::new(seed, COIN_STREAM).trial(index), fault)
}

/// The first `trials` trials in order.
pub fn coin_trial_log(seed: u64, trials: u64, fault: &FaultSpec) -> Vec<CoinTrial> {
    let mut cursor = StreamKey::new(seed, COIN_STREAM).cursor(0);
    (0..trials).map(|_| build_trial(&cursor.next_trial(), fault)).collect()
}

/// Camera statistics: every column of the table is `(½, 0, 0, ½)`.
pub fn camera_joint(_pair: SettingPair) -> JointDistribution {
    JointDistribution::new_unchecked(0.5, 0.0, 0.0, 0.5)
}

/// Counter statistics with the faulty `A(a)→L2` link.
pub fn counter_joint(pair: SettingPair, fault: &FaultSpec) -> JointDistribution {
    match pair {
        SettingPair::AD => {
            let e = fault.epsilon;
            JointDistribution::new_unchecked(0.5 * (1.0 - e), 0.0, 0.5 * e, 0.5)
        }
        _ => camera_joint(pair),
    }
}

/// Correlations read off the four counters.
pub fn counter_correlations(fault: &FaultSpec) -> Result<CorrelationSet> {
    let mut e = [0.0; 4];
    for pair in SettingPair::ALL {
        e[pair.index()] = correlation(&counter_joint(pair, fault))?;
    }
    CorrelationSet::from_array(e)
}

/// CHSH value of the counters, `2 + ε`.
pub fn coin_s(epsilon: f64) -> Result<ChshStatistic> {
    let fault = FaultSpec::new(epsilon)?;
    Ok(chsh(&counter_correlations(&fault)?))
}

/// Tally of one concordance counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTally {
    pub stage: String,
    pub pair: SettingPair,
    pub counts: OutcomeCounts,
    pub total: u64,
    pub e: f64,
    pub se: f64,
}

/// Tallies of all four counters over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterTallies {
    pub trials: u64,
    pub stages: Vec<StageTally>,
    pub s: f64,
    pub se_s: f64,
}

impl CounterTallies {
    pub fn correlations(&self) -> CorrelationSet {
        CorrelationSet {
            e_ab: self.stages[0].e,
            e_ad: self.stages[1].e,
            e_cb: self.stages[2].e,
            e_cd: self.stages[3].e,
        }
    }

    pub fn s_z_score(&self, expected: f64) -> f64 {
        z_score(self.s - expected, self.se_s)
    }
}

/// Runs the apparatus for `trials` coins, split over `shards` workers.
/// Results depend only on `(seed, trials, fault)`.
pub fn simulate_coin(trials: u64, fault: &FaultSpec, seed: u64, shards: usize) -> Result<CounterTallies> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if shards == 0 {
        return Err(invalid("shards must be at least 1"));
    }
    let fault = FaultSpec::new(fault.epsilon)?;
    let key = StreamKey::new(seed, COIN_STREAM);
    let partial: Vec<[OutcomeCounts; 4]> = shard_ranges(trials, shards)
        .into_par_iter()
        .map(|range| {
            let mut cursor = key.cursor(range.start);
            let mut counts = [OutcomeCounts::default(); 4];
            for _ in range {
                let trial = build_trial(&cursor.next_trial(), &fault);
                for (slot, (x, y)) in counts.iter_mut().zip(trial.stage_inputs) {
                    slot.record(x, y);
                }
            }
            counts
        })
        .collect();
    let mut counts = [OutcomeCounts::default(); 4];
    for shard in &partial {
        for (acc, c) in counts.iter_mut().zip(shard) {
            acc.merge(c);
        }
    }

    let stages: Vec<StageTally> = SettingPair::ALL
        .iter()
        .zip(STAGES)
        .zip(counts)
        .map(|((&pair, stage), counts)| {
            let total = counts.total();
            let e = counts.correlation().unwrap_or_default();
            StageTally {
                stage: stage.to_string(),
                pair,
                counts,
                total,
                e,
                se: standard_error(e, total),
            }
        })
        .collect();
    let corr = CorrelationSet::new(stages[0].e, stages[1].e, stages[2].e, stages[3].e)?;
    let se_s = stages.iter().map(|s| s.se * s.se).sum::<f64>().sqrt();
    Ok(CounterTallies {
        trials,
        s: chsh(&corr).value(),
        se_s,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_table() {
        for pair in SettingPair::ALL {
            let j = camera_joint(pair);
            assert_eq!(j.cells(), [0.5, 0.0, 0.0, 0.5]);
            assert_eq!(correlation(&j).unwrap(), 1.0);
        }
    }

    #[test]
    fn counter_table() {
        let fault = FaultSpec::new(0.2).unwrap();
        let j = counter_joint(SettingPair::AD, &fault);
        assert_eq!(j.cells(), [0.4, 0.0, 0.1, 0.5]);
        assert!((correlation(&j).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            counter_joint(SettingPair::AD, &FaultSpec::new(0.0).unwrap()).cells(),
            [0.5, 0.0, 0.0, 0.5]
        );
        for eps in [0.0, 0.3, 1.0] {
            let f = FaultSpec::new(eps).unwrap();
            assert_eq!(correlation(&counter_joint(SettingPair::CB, &f)).unwrap(), 1.0);
        }
        assert_eq!(fault.faulty_link(), "A(a)→L2");
        assert!(FaultSpec::new(1.5).is_err());
    }

    #[test]
    fn coin_s_examples() {
        assert_eq!(coin_s(0.0).unwrap().value(), 2.0);
        assert!((coin_s(0.3).unwrap().value() - 2.3).abs() < 1e-15);
        assert_eq!(coin_s(1.0).unwrap().value(), 3.0);
        assert!(coin_s(-0.1).is_err());
    }

    #[test]
    fn noiseless_coin_is_exact() {
        let t = simulate_coin(100_000, &FaultSpec::new(0.0).unwrap(), 4, 3).unwrap();
        for stage in &t.stages {
            assert_eq!(stage.e, 1.0);
            assert_eq!(stage.total, 100_000);
        }
        assert_eq!(t.s, 2.0);
        assert_eq!(t.se_s, 0.0);
    }

    #[test]
    fn fault_only_touches_l2() {
        let fault = FaultSpec::new(0.5).unwrap();
        for t in coin_trial_log(8, 2_000, &fault) {
            assert_eq!(t.cameras, [t.orientation; 4]);
            assert_eq!(t.stage_inputs[0], (t.orientation, t.orientation));
            assert_eq!(t.stage_inputs[2], (t.orientation, t.orientation));
            assert_eq!(t.stage_inputs[3], (t.orientation, t.orientation));
            let (x, y) = t.stage_inputs[1];
            assert_eq!(y, t.orientation);
            if t.orientation == Outcome::Minus {
                assert_eq!(x, Outcome::Minus);
            }
        }
    }

    #[test]
    fn trial_log_matches_pure_trials() {
        let fault = FaultSpec::new(0.3).unwrap();
        let log = coin_trial_log(77, 50, &fault);
        for (i, t) in log.iter().enumerate() {
            assert_eq!(*t, coin_trial(77, i as u64, &fault));
        }
    }

    #[test]
    fn simulate_rejects_bad_arguments() {
        let fault = FaultSpec::new(0.1).unwrap();
        assert!(simulate_coin(0, &fault, 1, 1).is_err());
        assert!(simulate_coin(10, &fault, 1, 0).is_err());
        assert!(simulate_coin(10, &FaultSpec { epsilon: 2.0 }, 1, 1).is_err());
    }
}
