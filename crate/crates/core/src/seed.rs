//! Named seed derivation.
//!
//! Every random stream in the pipeline is derived from one top-level seed plus
//! a stream tag and an index, so chains, replicates and permutations can run in
//! any order (or concurrently) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Chain,
    Replicate,
    Permutation,
    Surface,
    Counts,
    Metric,
    Init,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Chain => 0x6368_6169_6e00_0001,
            Stream::Replicate => 0x7265_706c_6963_0002,
            Stream::Permutation => 0x7065_726d_7574_0003,
            Stream::Surface => 0x7375_7266_6163_0004,
            Stream::Counts => 0x636f_756e_7473_0005,
            Stream::Metric => 0x6d65_7472_6963_0006,
            Stream::Init => 0x696e_6974_0000_0007,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for `(stream, index)` from `seed`.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ stream.tag()).wrapping_add(index))
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, stream, index))
}
