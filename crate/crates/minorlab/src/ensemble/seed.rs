//! Counter-based random streams addressed by `(master_seed, stream, indices)`.
//!
//! Every random quantity in the library is produced by a generator keyed by
//! its logical address rather than by consumption order. The value stored at
//! array position `(i, j)` therefore depends only on the master seed and the
//! address, never on which minor asked for it first, how many workers are
//! running, or how much of the array was materialized before. This is what
//! makes the doubly infinite entry array a well-defined shared object.

use rand::RngCore;

/// splitmix64 finalizer; bijective on u64 with full avalanche.
#[inline(always)]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Absorb one word into a running key.
#[inline(always)]
fn absorb(state: u64, word: u64) -> u64 {
    mix(state ^ word.wrapping_mul(GOLDEN).wrapping_add(0x2545_f491_4f6c_dd1d))
}

/// Logical stream labels. Distinct labels give statistically independent
/// streams under the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Static entries of the infinite array, addressed by `(i, j)`, `i <= j`.
    Entry,
    /// Packed sign words for real Rademacher entries, addressed by `(i, j >> 6)`.
    EntryWord,
    /// Ornstein-Uhlenbeck noise array, addressed by `(step, i, j)`.
    OuNoise(u64),
    /// Driving Brownian increments of the eigenvalue SDE, addressed by `(substep, i)`.
    DbmNoise(u64),
    /// Initial data or auxiliary draws that need one scalar stream per index.
    Aux,
}

impl Stream {
    #[inline(always)]
    fn tag(self) -> (u64, u64) {
        match self {
            Stream::Entry => (0x01, 0),
            Stream::EntryWord => (0x02, 0),
            Stream::OuNoise(step) => (0x03, step),
            Stream::DbmNoise(step) => (0x04, step),
            Stream::Aux => (0x05, 0),
        }
    }
}

/// Deterministic generator for one address: a keyed counter run through the
/// splitmix64 finalizer. Implements [`RngCore`] so distribution adaptors from
/// `rand_distr` can consume it.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, ctr: 0 }
    }
}

impl RngCore for CounterRng {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Address-keyed access to all random streams of one realization of the
/// infinite array (and of the flows built on top of it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedContext {
    master: u64,
}

impl SeedContext {
    pub fn new(master_seed: u64) -> Self {
        SeedContext { master: master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// Derive an independent child context, e.g. one per trajectory index.
    pub fn descend(&self, lineage: u64, index: u64) -> SeedContext {
        let mut s = absorb(self.master, 0xd15e_a5e5_0000_0000 ^ lineage);
        s = absorb(s, index);
        SeedContext { master: s }
    }

    /// Generator for the stream `stream` at address `(i, j)`.
    #[inline]
    pub fn rng_at(&self, stream: Stream, i: u64, j: u64) -> CounterRng {
        let (tag, sub) = stream.tag();
        let mut s = absorb(self.master, tag);
        if sub != 0 {
            s = absorb(s, sub);
        }
        s = absorb(s, i);
        s = absorb(s, j);
        CounterRng::from_key(s)
    }

    /// One raw word from `stream` at `(i, j)`; used for packed sign lookups.
    #[inline]
    pub fn word_at(&self, stream: Stream, i: u64, j: u64) -> u64 {
        self.rng_at(stream, i, j).next_u64()
    }
}
