//! Monte Carlo estimate of `E[max occupancy]`, independent of the exact engine.
//!
//! Replications are cut into fixed blocks of [`BLOCK`] indices. Block `b`
//! draws from ChaCha8 seeded with `splitmix64(seed ^ splitmix64(b))`, so the
//! merged result does not depend on how blocks are spread over threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/splitmix64-block-seed";
pub const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub spec: ProblemSpec,
    pub rounds: u64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_max: f64,
    pub std_error: f64,
    pub histogram: BTreeMap<u64, u64>,
}

impl SimResult {
    /// `meanMax - rT/n`, the simulated counterpart of `A(n,r;T)`.
    pub fn centered(&self, config: &SimConfig) -> f64 {
        self.mean_max - (config.spec.r as f64 * config.rounds as f64) / config.spec.n as f64
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn block_seed(seed: u64, block: u64) -> u64 {
    splitmix64(seed ^ splitmix64(block))
}

/// Writes a uniform `r`-subset of `0..n` into `bins[..r]` by a partial
/// Fisher-Yates shuffle. `bins` must hold a permutation of `0..n`.
pub fn draw_subset<R: Rng>(rng: &mut R, bins: &mut [usize], r: usize) {
    let n = bins.len();
    for i in 0..r {
        let j = rng.random_range(i..n);
        bins.swap(i, j);
    }
}

fn replicate<R: Rng>(rng: &mut R, spec: ProblemSpec, rounds: u64, bins: &mut [usize], load: &mut [u64]) -> u64 {
    load.iter_mut().for_each(|l| *l = 0);
    let r = spec.r as usize;
    for _ in 0..rounds {
        draw_subset(rng, bins, r);
        for &b in &bins[..r] {
            load[b] += 1;
        }
    }
    load.iter().copied().max().unwrap_or(0)
}

fn run_block(config: &SimConfig, block: u64) -> BTreeMap<u64, u64> {
    let n = config.spec.n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(block_seed(config.seed, block));
    let mut bins: Vec<usize> = (0..n).collect();
    let mut load = vec![0u64; n];
    let start = block * BLOCK;
    let end = (start + BLOCK).min(config.samples);
    let mut hist = BTreeMap::new();
    for _ in start..end {
        let m = replicate(&mut rng, config.spec, config.rounds, &mut bins, &mut load);
        *hist.entry(m).or_insert(0) += 1;
    }
    hist
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    if config.samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let blocks = config.samples.div_ceil(BLOCK);
    let histogram = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(config, b))
        .reduce(BTreeMap::new, |mut acc, h| {
            for (m, c) in h {
                *acc.entry(m).or_insert(0) += c;
            }
            acc
        });
    let count = config.samples as f64;
    let mean = histogram.iter().map(|(&m, &c)| m as f64 * c as f64).sum::<f64>() / count;
    let var = if config.samples > 1 {
        histogram
            .iter()
            .map(|(&m, &c)| (m as f64 - mean).powi(2) * c as f64)
            .sum::<f64>()
            / (count - 1.0)
    } else {
        0.0
    };
    Ok(SimResult {
        mean_max: mean,
        std_error: (var / count).sqrt(),
        histogram,
    })
}
