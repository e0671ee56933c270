//! Hierarchically keyed random streams.
//!
//! A stream is identified by `(master_seed, cell, replication, chain)`. The
//! four words form the ChaCha key directly, so every distinct key yields an
//! independent stream and results never depend on which worker ran what.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub cell: u64,
    pub replication: u64,
    pub chain: u64,
}

impl StreamKey {
    fn seed_bytes(&self) -> [u8; 32] {
        let mut seed = [0u8; 32];
        for (slot, word) in seed.chunks_exact_mut(8).zip([self.master_seed, self.cell, self.replication, self.chain]) {
            slot.copy_from_slice(&word.to_le_bytes());
        }
        seed
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    key: StreamKey,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(key: StreamKey) -> Self {
        Self { key, inner: ChaCha8Rng::from_seed(key.seed_bytes()) }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// One draw from a chi-square distribution with `df` degrees of freedom.
    pub fn chi_squared(&mut self, df: f64) -> f64 {
        chi_squared(&mut self.inner, df)
    }
}

/// Returns the stream for the given key; identical keys give identical streams.
pub fn rng_stream(master_seed: u64, cell: u64, replication: u64, chain: u64) -> RngStream {
    RngStream::new(StreamKey { master_seed, cell, replication, chain })
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A private stream for one imputation chain, seeded from a parent stream.
pub(crate) fn chain_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn chi_squared<R: Rng + ?Sized>(rng: &mut R, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").sample(rng)
}
