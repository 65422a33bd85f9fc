//! Deterministic per-(node, round, slot) randomness.
//!
//! Every random decision in the protocol draws from a stream keyed by
//! `(seed, real_id, round, slot)`. Streams are produced by a counter-based
//! SplitMix64 construction: the four key words are absorbed one mixing step
//! at a time, and successive outputs advance an internal counter. Distinct
//! keys therefore give independent-quality streams, and a full run is a pure
//! function of the seed.

/// One SplitMix64 scramble step.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const GAMMA: u64 = 0x9e3779b97f4a7c15;

/// Deterministic random stream for one `(seed, real_id, round, slot)` key.
#[derive(Clone, Debug)]
pub struct SeededRng {
    state: u64,
}

/// Builds the stream for the given key.
pub fn seeded_rng(seed: u64, real_id: u64, round: u64, slot: u64) -> SeededRng {
    let mut state = seed;
    for word in [real_id, round, slot] {
        state = mix(state.wrapping_add(GAMMA).wrapping_add(word.wrapping_mul(GAMMA)));
    }
    SeededRng { state }
}

impl SeededRng {
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform draw in `[0, bound)` without modulo bias (widening multiply
    /// with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty draw range");
        loop {
            let x = self.next_u64();
            let wide = (x as u128) * (bound as u128);
            let low = wide as u64;
            if low >= bound || low >= bound.wrapping_neg() % bound {
                return (wide >> 64) as u64;
            }
        }
    }
}
