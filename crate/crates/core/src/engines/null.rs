//! Empirical null: a normal fitted to the central bulk of the scores.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalNull {
    pub mu0: f64,
    pub sigma0: f64,
    pub pi0: f64,
}

impl EmpiricalNull {
    pub fn new(mu0: f64, sigma0: f64, pi0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) || !mu0.is_finite() {
            return Err(Error::Numerical(format!("invalid null scale {sigma0}")));
        }
        if !(pi0 > 0.0 && pi0 <= 1.0) {
            return Err(Error::Numerical(format!("null proportion {pi0} outside (0, 1]")));
        }
        Ok(Self { mu0, sigma0, pi0 })
    }

    pub fn pdf(&self, z: f64) -> f64 {
        stats::normal_pdf(z, self.mu0, self.sigma0)
    }

    /// Two-sided p-value `2 (1 - Phi(|z - mu0| / sigma0))`.
    pub fn p_value(&self, z: f64) -> f64 {
        (2.0 * stats::std_normal_sf((z - self.mu0).abs() / self.sigma0)).min(1.0)
    }
}

/// The central window on which the null is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum NullWindow {
    /// `[Q(lower), Q(upper)]` of the sample.
    Quantile { lower: f64, upper: f64 },
    /// `median +- b * IQR / 1.349` with `b = 4.3 exp(-0.26 log10 N)`, wider
    /// for small samples.
    #[default]
    Adaptive,
}

impl NullWindow {
    /// Window bounds for a sorted sample.
    pub fn bounds(&self, sorted: &[f64]) -> (f64, f64) {
        match *self {
            NullWindow::Quantile { lower, upper } => {
                (stats::quantile_sorted(sorted, lower), stats::quantile_sorted(sorted, upper))
            }
            NullWindow::Adaptive => {
                let n = sorted.len() as f64;
                let b = if n > 500_000.0 { 1.0 } else { 4.3 * (-0.26 * n.log10()).exp() };
                let med = stats::quantile_sorted(sorted, 0.5);
                let iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
                let half = b * iqr / stats::IQR_TO_SD;
                (med - half, med + half)
            }
        }
    }
}

struct TruncatedNormal {
    a: f64,
    b: f64,
    n: f64,
    s1: f64,
    s2: f64,
    /// Bounds on log sigma keeping the search away from degenerate scales.
    log_sigma_range: (f64, f64),
}

impl CostFunction for TruncatedNormal {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let (mu, ls) = (p[0], p[1]);
        if ls < self.log_sigma_range.0 || ls > self.log_sigma_range.1 {
            return Ok(f64::INFINITY);
        }
        let sigma = ls.exp();
        let mass = stats::std_normal_cdf((self.b - mu) / sigma) - stats::std_normal_cdf((self.a - mu) / sigma);
        if !(mass > 0.0) {
            return Ok(f64::INFINITY);
        }
        let ss = self.s2 - 2.0 * mu * self.s1 + self.n * mu * mu;
        Ok(self.n * ls + ss / (2.0 * sigma * sigma) + self.n * mass.ln())
    }
}

/// Truncated-normal maximum likelihood on the central window; `pi0` is the
/// window fraction over the fitted null mass in the window, capped at 1.
pub fn fit_empirical_null(z: &[f64], window: NullWindow) -> Result<EmpiricalNull> {
    if z.len() < 200 {
        return Err(Error::InvalidInput(format!("empirical null needs N >= 200, got {}", z.len())));
    }
    let sorted = stats::sorted(z);
    let (a, b) = window.bounds(&sorted);
    if !(b > a) {
        return Err(Error::Numerical("empirical null window has zero width".into()));
    }
    let inside: Vec<f64> = sorted.iter().copied().filter(|v| *v >= a && *v <= b).collect();
    let n = inside.len() as f64;
    let s1: f64 = inside.iter().sum();
    let s2: f64 = inside.iter().map(|v| v * v).sum();
    let width = b - a;
    let mu_start = stats::quantile_sorted(&sorted, 0.5);
    let sigma_start =
        (stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25)) / stats::IQR_TO_SD;
    if !(sigma_start > 0.0) {
        return Err(Error::Numerical("empirical null window has zero width".into()));
    }
    let ls = sigma_start.ln();
    let problem =
        TruncatedNormal { a, b, n, s1, s2, log_sigma_range: (ls - 5.0_f64.ln() * 3.0, ls + 5.0_f64.ln() * 3.0) };
    let simplex = vec![vec![mu_start, ls], vec![mu_start + 0.1 * width, ls], vec![mu_start, ls + 0.2]];
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(|e| Error::Numerical(e.to_string()))?;
    let result = Executor::new(problem, solver)
        .configure(|s| s.max_iters(2000))
        .run()
        .map_err(|e| Error::NonConvergence(format!("empirical null: {e}")))?;
    let best = result
        .state()
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::NonConvergence("empirical null: no solution".into()))?;
    let (mu0, sigma0) = (best[0], best[1].exp());
    let null_mass = stats::normal_cdf(b, mu0, sigma0) - stats::normal_cdf(a, mu0, sigma0);
    let frac = n / z.len() as f64;
    let pi0 = (frac / null_mass).min(1.0);
    EmpiricalNull::new(mu0, sigma0, pi0)
}
