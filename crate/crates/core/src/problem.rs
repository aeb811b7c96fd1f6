use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported bin count. Profile multiplicities are computed in `u128`.
pub const MAX_BINS: u32 = 20;

/// `n` bins, `r` distinct bins hit per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: u32,
    pub r: u32,
}

impl ProblemSpec {
    pub fn new(n: u32, r: u32) -> Result<Self> {
        if r == 0 || r > n || n > MAX_BINS {
            return Err(Error::InvalidSpec {
                n,
                r,
                max_n: MAX_BINS,
            });
        }
        Ok(ProblemSpec { n, r })
    }

    /// `A` is identically zero when every round fills every bin.
    pub fn is_degenerate(&self) -> bool {
        self.r == self.n
    }

    /// Number of equally likely outcomes of one round, `C(n, r)`.
    pub fn outcomes_per_round(&self) -> u64 {
        binomial(self.n as u64, self.r as u64) as u64
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}
