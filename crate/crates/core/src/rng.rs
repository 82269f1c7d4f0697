//! Counter-addressed random streams.
//!
//! Every random variate used by the library is addressed by a tuple
//! `(seed, domain, replica, step, index, slot)`. The first three select a
//! ChaCha8 key, the step selects the ChaCha stream, and `(index, slot)`
//! select a disjoint window of the keystream. Two draws with different
//! addresses never share keystream words, so results do not depend on the
//! order in which particles or replicas are processed, nor on the number of
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Keystream words reserved per `(index, slot)` window.
const SLOT_BITS: u32 = 24;
const SLOT_COUNT_BITS: u32 = 4;

/// Independent purposes that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    /// Initial positions of the particle system.
    Initial = 1,
    /// Per-step auxiliary draws shared by the GA and nonlinear systems.
    Auxiliary = 2,
    /// Independent reference ensembles (d >= 2 reference solutions).
    Reference = 3,
    /// Random instances for property suites.
    Suite = 4,
    /// Monte Carlo checks of the coupling sampler.
    Coupling = 5,
}

/// Variable slot inside one particle's window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Slot {
    Gamma = 0,
    Xi = 1,
    Gate = 2,
    Alpha1 = 3,
    Alpha2 = 4,
    Position = 5,
    Misc = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed family of streams for one `(seed, domain, replica)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    seed: u64,
    domain: Domain,
    replica: u64,
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64, domain: Domain, replica: u64) -> Self {
        let mut state = splitmix64(seed);
        state = splitmix64(state ^ domain as u64);
        state = splitmix64(state ^ replica.wrapping_mul(0xd6e8_feb8_6659_fd93));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { seed, domain, replica, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Generator positioned at the window of `(step, index, slot)`.
    pub fn rng(&self, step: u64, index: u64, slot: Slot) -> ChaCha8Rng {
        assert!(index < 1 << 36, "stream index out of range");
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(step);
        let window = ((index as u128) << SLOT_COUNT_BITS) | slot as u128;
        rng.set_word_pos(window << SLOT_BITS);
        rng
    }
}
