//! Named, seeded random streams.
//!
//! Every source of randomness draws from a stream identified by
//! `(seed, stream id)`. Streams are ChaCha8 generators keyed by a
//! platform-independent mix of the two, so draw sequences are identical
//! across runs and machines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Worldgen,
    Dynamics,
    PolicyInit,
    PolicySample,
    Minibatch,
    /// Free-form sub-stream, e.g. one per generator component.
    Named(&'static str),
}

impl StreamId {
    pub fn label(&self) -> &'static str {
        match self {
            StreamId::Worldgen => "worldgen",
            StreamId::Dynamics => "dynamics",
            StreamId::PolicyInit => "policy-init",
            StreamId::PolicySample => "policy-sample",
            StreamId::Minibatch => "minibatch",
            StreamId::Named(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: StreamId,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: StreamId) -> Self {
        Self { seed, stream_id }
    }

    pub fn key(&self) -> u64 {
        derive_key(self.seed, self.stream_id.label())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key())
    }
}

/// Shorthand for `RngStream::new(seed, id).rng()`.
pub fn stream(seed: u64, id: StreamId) -> ChaCha8Rng {
    RngStream::new(seed, id).rng()
}

/// 64-bit FNV-1a over the label, folded into the seed with splitmix64.
pub fn derive_key(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
