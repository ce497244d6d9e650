//! Reproducible per-pair random streams.
//!
//! Every random stream used by the crate is a `ChaCha8Rng` seeded from a
//! stateless mix of `(master seed, purpose, a, b)`. The mix is the
//! SplitMix64 finalizer applied after each word is folded in:
//!
//! ```text
//! h = mix(master ^ purpose_tag)
//! h = mix(h ^ (a + GOLDEN))
//! h = mix(h ^ (b + 2 * GOLDEN))
//! ```
//!
//! For sampling, `a` is the flat cell index and `b` the input index, so the
//! samples of a pair depend only on the pair and never on the order in
//! which pairs are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    /// Samples drawn while building an abstraction.
    Build,
    /// Hold-out samples for accuracy validation.
    Validation,
    /// Initial states of closed-loop trials.
    Trial,
}

impl StreamPurpose {
    pub fn tag(self) -> u64 {
        match self {
            StreamPurpose::Build => 0x6275_696C_645F_7331,
            StreamPurpose::Validation => 0x7661_6C69_645F_7331,
            StreamPurpose::Trial => 0x7472_6961_6C5F_7331,
        }
    }
}

pub fn stream_seed(master: u64, purpose: StreamPurpose, a: u64, b: u64) -> u64 {
    let h = mix64(master ^ purpose.tag());
    let h = mix64(h ^ a.wrapping_add(GOLDEN));
    mix64(h ^ b.wrapping_add(GOLDEN.wrapping_mul(2)))
}

pub fn stream(master: u64, purpose: StreamPurpose, a: u64, b: u64) -> Stream {
    Stream::seed_from_u64(stream_seed(master, purpose, a, b))
}
