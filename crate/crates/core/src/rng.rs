//! Counter-mode random draws.
//!
//! Every trial owns one ChaCha block (eight `u64` words) addressed by
//! `(seed, stream, trial)`. A worker seeks straight to its first trial, so
//! the draws of a trial never depend on how trials are split across workers.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Number of `u64` draws available to a single trial.
pub const WORDS_PER_TRIAL: usize = 8;

// 32-bit words per trial, i.e. exactly one ChaCha block.
const U32_WORDS_PER_TRIAL: u128 = 2 * WORDS_PER_TRIAL as u128;

/// Identifies an independent random stream, e.g. one setting pair of one
/// experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Cursor positioned at `first_trial`.
    pub fn cursor(&self, first_trial: u64) -> TrialCursor {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(first_trial as u128 * U32_WORDS_PER_TRIAL);
        TrialCursor { rng }
    }

    /// The draws of a single trial, as a pure function of its coordinates.
    pub fn trial(&self, trial: u64) -> TrialDraws {
        self.cursor(trial).next_trial()
    }
}

/// Sequential reader over consecutive trials of one stream.
#[derive(Debug, Clone)]
pub struct TrialCursor {
    rng: ChaCha8Rng,
}

impl TrialCursor {
    pub fn next_trial(&mut self) -> TrialDraws {
        let mut words = [0u64; WORDS_PER_TRIAL];
        for w in &mut words {
            *w = self.rng.next_u64();
        }
        TrialDraws { words }
    }
}

/// The raw words belonging to one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialDraws {
    words: [u64; WORDS_PER_TRIAL],
}

impl TrialDraws {
    pub fn word(&self, slot: usize) -> u64 {
        self.words[slot]
    }

    /// Uniform variate in `[0, 1)` with 53 random bits.
    pub fn uniform(&self, slot: usize) -> f64 {
        (self.words[slot] >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw: true with probability `p`.
    pub fn bernoulli(&self, slot: usize, p: f64) -> bool {
        self.uniform(slot) < p
    }
}

/// Splits `0..trials` into `shards` contiguous ranges, in order.
pub fn shard_ranges(trials: u64, shards: usize) -> Vec<std::ops::Range<u64>> {
    let shards = shards.max(1) as u64;
    let base = trials / shards;
    let extra = trials % shards;
    let mut start = 0;
    (0..shards)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeking_matches_sequential_reads() {
        let key = StreamKey::new(42, 3);
        let mut cursor = key.cursor(0);
        let sequential: Vec<_> = (0..100).map(|_| cursor.next_trial()).collect();
        for (i, draws) in sequential.iter().enumerate() {
            assert_eq!(*draws, key.trial(i as u64));
        }
        let mut mid = key.cursor(57);
        assert_eq!(mid.next_trial(), sequential[57]);
        assert_eq!(mid.next_trial(), sequential[58]);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let a = StreamKey::new(1, 0).trial(0);
        let b = StreamKey::new(1, 1).trial(0);
        let c = StreamKey::new(2, 0).trial(0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let key = StreamKey::new(9, 0);
        let mut cursor = key.cursor(0);
        let mut sum = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let d = cursor.next_trial();
            for slot in 0..WORDS_PER_TRIAL {
                let u = d.uniform(slot);
                assert!((0.0..1.0).contains(&u));
                sum += u;
            }
        }
        let mean = sum / (n * WORDS_PER_TRIAL) as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn shard_ranges_cover_all_trials() {
        for trials in [0u64, 1, 7, 100, 1001] {
            for shards in [1usize, 3, 8, 16] {
                let ranges = shard_ranges(trials, shards);
                assert_eq!(ranges.len(), shards);
                assert_eq!(ranges[0].start, 0);
                assert_eq!(ranges.last().unwrap().end, trials);
                for w in ranges.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                }
            }
        }
    }
}
