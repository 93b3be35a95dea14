//! Relevance-integrated empirical Bayes: the prior is estimated from the
//! LASERs at the target profile instead of the full ensemble.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::custom::Customizer;
use crate::engines::npmle::{default_grid, npmle_on_grid, posterior, NpmleConfig, Posterior, PriorEstimate};
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbConfig {
    pub npmle: NpmleConfig,
    /// HPD level is `1 - alpha`.
    pub alpha: f64,
    /// Likelihood noise scale; `None` uses IQR / 1.3489 of the LASERs.
    pub sigma: Option<f64>,
}

impl Default for EbConfig {
    fn default() -> Self {
        Self { npmle: NpmleConfig::default(), alpha: 0.2, sigma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebResult {
    pub x: Vec<f64>,
    pub z0: f64,
    pub y0: f64,
    /// `E[z | x0]` added back for the z-domain summaries.
    pub shift: f64,
    pub sigma: f64,
    pub flat: bool,
    pub bags: usize,
    /// Bag-averaged prior in the y-domain.
    pub prior: PriorEstimate,
    pub posterior_y: Posterior,
    pub posterior_z: Posterior,
}

fn average_priors(priors: &[PriorEstimate]) -> PriorEstimate {
    let k = priors.len() as f64;
    let g = priors[0].grid.len();
    let weights = (0..g).map(|i| priors.iter().map(|p| p.weights[i]).sum::<f64>() / k).collect();
    PriorEstimate {
        grid: priors[0].grid.clone(),
        weights,
        sigma: priors[0].sigma,
        loglik: priors[0].loglik.clone(),
        converged: priors.iter().all(|p| p.converged),
    }
}

fn average_posteriors(posts: &[Posterior], alpha: f64) -> Result<Posterior> {
    let k = posts.len() as f64;
    let g = posts[0].grid.len();
    let mass = (0..g).map(|i| posts.iter().map(|p| p.mass[i]).sum::<f64>() / k).collect();
    Posterior::from_mass(posts[0].grid.clone(), mass, alpha)
}

/// rEB prior and posterior for a case `(x0, z0)`. The customizer should
/// carry a regression adjustment; without one `y = z`.
pub fn reb_inference(cz: &Customizer, x0: &[f64], z0: f64, eb: &EbConfig) -> Result<RebResult> {
    if !z0.is_finite() {
        return Err(Error::InvalidInput("target score must be finite".into()));
    }
    if !(eb.alpha > 0.0 && eb.alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {} outside (0, 1)", eb.alpha)));
    }
    let shift = cz.shift(x0);
    let y0 = z0 - shift;
    let lasers = cz.lasers(x0)?;
    let pooled: Vec<f64> = lasers.iter().flat_map(|l| l.samples.iter().copied()).collect();
    let sigma = match eb.sigma {
        Some(s) => s,
        None => stats::iqr(&pooled) / stats::IQR_TO_SD,
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Numerical("LASER spread is zero".into()));
    }
    let grid = default_grid(&pooled, sigma, eb.npmle.grid_size);
    let priors = lasers
        .par_iter()
        .map(|l| npmle_on_grid(&l.samples, sigma, grid.clone(), &eb.npmle))
        .collect::<Result<Vec<_>>>()?;
    let posts = priors.iter().map(|p| posterior(p, y0, sigma, eb.alpha)).collect::<Result<Vec<_>>>()?;
    let posterior_y = average_posteriors(&posts, eb.alpha)?;
    Ok(RebResult {
        x: x0.to_vec(),
        z0,
        y0,
        shift,
        sigma,
        flat: lasers[0].flat,
        bags: lasers.len(),
        prior: average_priors(&priors),
        posterior_z: posterior_y.clone().shifted(shift),
        posterior_y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBayes {
    pub x: Vec<f64>,
    pub y0: f64,
    pub shift: f64,
    pub sigma: f64,
    /// Posterior averaged over bootstrap cycles, y-domain.
    pub posterior_y: Posterior,
    pub posterior_z: Posterior,
    /// Plug-in rEB posterior, y-domain.
    pub plug_in: Posterior,
    pub cycles: usize,
    pub failed: usize,
}

/// Credible interval from `b` parametric-bootstrap re-estimations of the
/// rEB prior, averaging the resulting posteriors at `y0`.
pub fn finite_bayes_ci(cz: &Customizer, x0: &[f64], y0: f64, b: usize, eb: &EbConfig) -> Result<FiniteBayes> {
    if b < 2 {
        return Err(Error::InvalidInput("finite-Bayes needs B >= 2 cycles".into()));
    }
    let shift = cz.shift(x0);
    let base = reb_inference(cz, x0, y0 + shift, eb)?;
    let sigma = base.sigma;
    let prior = &base.prior;
    let n = cz.laser_size();
    let seed = cz.config().seed;
    let root = RngStream::for_profile(seed, Purpose::FiniteBayes, x0);
    let posts: Vec<Option<Posterior>> = (0..b)
        .into_par_iter()
        .map(|c| {
            let mut rng = root.child(Purpose::FiniteBayes, c as u64).rng();
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let theta = prior.sample_theta(rng.random());
                    let e: f64 = rng.sample(StandardNormal);
                    theta + sigma * e
                })
                .collect();
            let p = npmle_on_grid(&y, sigma, prior.grid.clone(), &eb.npmle).ok()?;
            posterior(&p, y0, sigma, eb.alpha).ok()
        })
        .collect();
    let ok: Vec<Posterior> = posts.into_iter().flatten().collect();
    let failed = b - ok.len();
    if failed * 10 > b || ok.is_empty() {
        return Err(Error::TooManyFailures { failed, total: b });
    }
    let posterior_y = average_posteriors(&ok, eb.alpha)?;
    Ok(FiniteBayes {
        x: x0.to_vec(),
        y0,
        shift,
        sigma,
        posterior_z: posterior_y.clone().shifted(shift),
        posterior_y,
        plug_in: base.posterior_y,
        cycles: b,
        failed,
    })
}
