//! Grid NPMLE of a normal-mixture prior, and posterior summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_GRID: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub loglik: Vec<f64>,
    pub converged: bool,
}

impl PriorEstimate {
    /// Prior mean.
    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.weights).map(|(t, w)| t * w).sum()
    }

    /// Marginal density of an observation at `z`.
    pub fn marginal(&self, z: f64) -> f64 {
        self.grid.iter().zip(&self.weights).map(|(t, w)| w * stats::normal_pdf(z, *t, self.sigma)).sum()
    }

    /// Draws `theta` from the prior by inverse cdf on the grid.
    pub fn sample_theta(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.grid.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return *t;
            }
        }
        *self.grid.last().unwrap()
    }
}

/// Uniform grid over `[min z - sigma, max z + sigma]`.
pub fn default_grid(z: &[f64], sigma: f64, size: usize) -> Vec<f64> {
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    stats::linspace(lo - sigma, hi + sigma, size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpmleConfig {
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NpmleConfig {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

pub fn npmle_prior(z: &[f64], sigma: f64, config: &NpmleConfig) -> Result<PriorEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("noise scale must be positive, got {sigma}")));
    }
    if config.grid_size < 2 {
        return Err(Error::Config("prior grid needs at least 2 points".into()));
    }
    let grid = default_grid(z, sigma, config.grid_size);
    npmle_on_grid(z, sigma, grid, config)
}

/// EM for mixing weights on a fixed `grid`, starting from uniform weights.
pub fn npmle_on_grid(z: &[f64], sigma: f64, grid: Vec<f64>, config: &NpmleConfig) -> Result<PriorEstimate> {
    if z.len() < 20 {
        return Err(Error::InvalidInput(format!("prior estimation needs N >= 20, got {}", z.len())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    // Repeated values share a likelihood row.
    let sorted = stats::sorted(z);
    let mut values: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for v in sorted {
        if values.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1.0;
        } else {
            values.push(v);
            counts.push(1.0);
        }
    }
    let g = grid.len();
    let total = z.len() as f64;
    let mut lik = Vec::with_capacity(values.len() * g);
    for &v in &values {
        lik.extend(grid.iter().map(|&t| stats::normal_pdf(v, t, sigma)));
    }
    let mut w = vec![1.0 / g as f64; g];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut next = vec![0.0; g];
    for _ in 0..config.max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut ll = 0.0;
        for (row, &c) in lik.chunks(g).zip(&counts) {
            let f: f64 = row.iter().zip(&w).map(|(l, wi)| l * wi).sum();
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Numerical("prior likelihood underflow".into()));
            }
            ll += c * f.ln();
            let s = c / f;
            for (nx, l) in next.iter_mut().zip(row) {
                *nx += s * l;
            }
        }
        if !ll.is_finite() {
            return Err(Error::Numerical("non-finite prior log-likelihood".into()));
        }
        let done = trace.last().is_some_and(|prev: &f64| (ll - prev).abs() <= config.tol * (1.0 + ll.abs()));
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
        for (wi, nx) in w.iter_mut().zip(&next) {
            *wi *= nx / total;
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(PriorEstimate { grid, weights: w, sigma, loglik: trace, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub grid: Vec<f64>,
    pub mass: Vec<f64>,
    pub mean: f64,
    pub mode: f64,
    pub level: f64,
    /// Hull of the highest-mass set.
    pub hpd: (f64, f64),
    pub hpd_mass: f64,
    /// Grid indices in the highest-mass set.
    pub hpd_set: Vec<usize>,
}

impl Posterior {
    /// Summaries of an arbitrary normalized mass vector.
    pub fn from_mass(grid: Vec<f64>, mass: Vec<f64>, alpha: f64) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical("posterior mass vanishes".into()));
        }
        let mass: Vec<f64> = mass.into_iter().map(|m| m / total).collect();
        let mean = grid.iter().zip(&mass).map(|(t, m)| t * m).sum();
        let mut idx: Vec<usize> = (0..grid.len()).collect();
        idx.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
        let mode = grid[idx[0]];
        let target = 1.0 - alpha;
        let mut acc = 0.0;
        let mut set = Vec::new();
        for &i in &idx {
            if acc >= target || mass[i] == 0.0 {
                break;
            }
            acc += mass[i];
            set.push(i);
        }
        set.sort_unstable();
        let hpd = (grid[set[0]], grid[*set.last().unwrap()]);
        Ok(Self { grid, mass, mean, mode, level: target, hpd, hpd_mass: acc, hpd_set: set })
    }

    pub fn shifted(mut self, delta: f64) -> Self {
        self.grid.iter_mut().for_each(|t| *t += delta);
        self.mean += delta;
        self.mode += delta;
        self.hpd = (self.hpd.0 + delta, self.hpd.1 + delta);
        self
    }
}

/// Posterior of `theta` at observation `z` under `prior` and noise `sigma`.
pub fn posterior(prior: &PriorEstimate, z: f64, sigma: f64, alpha: f64) -> Result<Posterior> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput("noise scale must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    // Log-scale weights guard against underflow far from the grid.
    let logs: Vec<f64> = prior
        .grid
        .iter()
        .zip(&prior.weights)
        .map(|(t, w)| if *w > 0.0 { w.ln() - 0.5 * ((z - t) / sigma).powi(2) } else { f64::NEG_INFINITY })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Numerical(format!("posterior mass vanishes at z = {z}")));
    }
    let mass: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    Posterior::from_mass(prior.grid.clone(), mass, alpha)
}
