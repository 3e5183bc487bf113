//! Counter-based random streams.
//!
//! A stream is the ChaCha8 keystream keyed by `master_seed` with the
//! ChaCha stream id set to `trial_index`. The `counter`-th uniform is the
//! `counter`-th 64-bit word of that keystream, so every draw is a pure
//! function of `(master_seed, trial_index, counter)` and a stream can be
//! positioned anywhere without replaying the draws before it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    trial_index: u64,
    counter: u64,
    core: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self::at(master_seed, trial_index, 0)
    }

    /// Stream positioned after `counter` draws.
    pub fn at(master_seed: u64, trial_index: u64, counter: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(master_seed);
        core.set_stream(trial_index);
        // Each uniform consumes one 64-bit word, i.e. two 32-bit ChaCha words.
        core.set_word_pos(2 * u128::from(counter));
        Self {
            master_seed,
            trial_index,
            counter,
            core,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    /// Number of uniforms drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform variate in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        self.counter += 1;
        (self.core.next_u64() >> 11) as f64 * UNIT
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.master_seed == other.master_seed
            && self.trial_index == other.trial_index
            && self.counter == other.counter
    }
}

impl Eq for RngStream {}
