//! Named, independently seeded random sub-streams.
//!
//! Every source of randomness in a run (UE drops, shadowing, fading,
//! scheduling permutations, scheme-internal draws) gets its own stream
//! derived from the master seed and a stream name. Scheme-dependent draws
//! therefore never desynchronize the shared streams, which keeps paired
//! runs of different schemes on identical topology/channel realizations.
//!
//! Each stream keeps a rolling digest of the words it produced so tests
//! can verify that two runs consumed identical randomness.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic stream seed from a master seed and a stream name.
pub fn stream_seed(master: u64, name: &str) -> u64 {
    splitmix64(master ^ fnv1a(FNV_OFFSET, name.as_bytes()))
}

/// A seeded ChaCha stream that digests everything it draws.
pub struct Stream {
    name: String,
    rng: ChaCha12Rng,
    digest: u64,
    draws: u64,
}

impl Stream {
    pub fn new(master: u64, name: &str) -> Self {
        Stream {
            name: name.to_string(),
            rng: ChaCha12Rng::seed_from_u64(stream_seed(master, name)),
            digest: FNV_OFFSET,
            draws: 0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Rolling FNV-1a digest over all words drawn so far.
    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn absorb(&mut self, word: u64) {
        self.digest = fnv1a(self.digest, &word.to_le_bytes());
        self.draws += 1;
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        let w = self.rng.next_u32();
        self.absorb(w as u64);
        w
    }

    fn next_u64(&mut self) -> u64 {
        let w = self.rng.next_u64();
        self.absorb(w);
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest);
        self.digest = fnv1a(self.digest, dest);
        self.draws += 1;
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}
