//! Artificial relevant samples by accept-reject through `d_x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relevance::LocalRelevance;
use crate::rng::RngStream;

pub const MAX_PROPOSALS: u64 = 10_000_000;
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserSample {
    pub x: Vec<f64>,
    pub samples: Vec<f64>,
    pub proposals: u64,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub stream: u64,
    pub flat: bool,
}

impl LaserSample {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `max_u d_x(u)` over the 1001-point grid and the observed ranks.
pub fn max_relevance(local: &LocalRelevance) -> f64 {
    local.max()
}

/// Draws `n` scores from `z` with probability proportional to
/// `d_x(F(z_i))`. `z` must be the sample the relevance basis was built on.
/// A flat relevance returns `z` unchanged.
pub fn generate_laser(z: &[f64], local: &LocalRelevance, n: usize, stream: RngStream) -> Result<LaserSample> {
    if n == 0 {
        return Err(Error::InvalidInput("LASER size must be >= 1".into()));
    }
    let basis = local.basis();
    if basis.n() != z.len() {
        return Err(Error::InvalidInput("relevance basis was built on a different sample".into()));
    }
    if local.is_flat() {
        return Ok(LaserSample {
            x: local.x().to_vec(),
            samples: z.to_vec(),
            proposals: 0,
            acceptance_rate: 1.0,
            seed: stream.seed,
            stream: stream.stream,
            flat: true,
        });
    }
    let max = local.max_raw();
    if !(max > 0.0) {
        return Err(Error::Numerical("relevance maximum is not positive".into()));
    }
    // Proposals index the sorted sample, so output depends only on the
    // multiset of scores.
    let sorted = basis.sorted_sample();
    let weights: Vec<f64> = basis.sorted_ranks().iter().map(|&u| local.raw(u)).collect();
    let mut rng = stream.rng();
    let len = sorted.len();
    let mut samples = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while samples.len() < n {
        if proposals >= MAX_PROPOSALS {
            let rate = samples.len() as f64 / proposals as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::PathologicalDensity { rate, proposals });
            }
        }
        proposals += 1;
        let i = rng.random_range(0..len);
        let u: f64 = rng.random();
        if weights[i] > u * max {
            samples.push(sorted[i]);
        }
    }
    Ok(LaserSample {
        x: local.x().to_vec(),
        samples,
        proposals,
        acceptance_rate: n as f64 / proposals as f64,
        seed: stream.seed,
        stream: stream.stream,
        flat: false,
    })
}
