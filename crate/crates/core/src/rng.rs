//! Counter-based random numbers.
//!
//! Every draw is a pure function of a [`RandomKey`], so the MapReduce path and
//! the sequential simulator see the same numbers no matter how work is split
//! across tasks or in which order tasks run.
//!
//! The mixing function, fixed for bit-for-bit compatibility with other
//! implementations:
//!
//! ```text
//! fin(z)  = SplitMix64 finalizer:
//!             z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!             z ^= z >> 27; z *= 0x94D049BB133111EB;
//!             z ^= z >> 31
//! G       = 0x9E3779B97F4A7C15
//! tag     = 1 for Build, 2 for Thalamic
//!
//! h = fin(seed + G * tag)
//! h = fin(h + G ^ (neuron_id << 32 | iter))      // neuron_id, iter as u32
//! h = fin(h + G ^ draw)
//! x = (h >> 11) * 2^-53                          // in [0, 1)
//! ```
//!
//! All arithmetic wraps modulo 2^64; `+ G ^ w` means `(h + G) ^ w`.

/// Golden-ratio increment used by SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose of a draw. Each stream is disjoint from the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Network construction: parameter jitter and synaptic weights.
    Build,
    /// Per-millisecond external drive.
    Thalamic,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Build => 1,
            Stream::Thalamic => 2,
        }
    }
}

/// Full address of one random draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomKey {
    pub seed: u64,
    pub stream: Stream,
    pub neuron_id: u32,
    pub iter: u32,
    pub draw: u64,
}

impl RandomKey {
    pub fn new(seed: u64, stream: Stream, neuron_id: u32, iter: u32, draw: u64) -> Self {
        Self {
            seed,
            stream,
            neuron_id,
            iter,
            draw,
        }
    }

    /// Raw 64 mixed bits for this key.
    pub fn bits(&self) -> u64 {
        let mut h = splitmix64_finalize(
            self.seed
                .wrapping_add(GOLDEN_GAMMA.wrapping_mul(self.stream.tag())),
        );
        let cell = (u64::from(self.neuron_id) << 32) | u64::from(self.iter);
        h = splitmix64_finalize(h.wrapping_add(GOLDEN_GAMMA) ^ cell);
        splitmix64_finalize(h.wrapping_add(GOLDEN_GAMMA) ^ self.draw)
    }
}

/// The SplitMix64 output finalizer (a bijection on `u64`).
#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map the top 53 bits of `bits` onto `[0, 1)`.
#[inline]
pub fn bits_to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[0, 1)` for `key`.
#[inline]
pub fn uniform01(key: RandomKey) -> f64 {
    bits_to_unit(key.bits())
}
