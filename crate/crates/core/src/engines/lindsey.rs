//! Marginal density by Poisson regression on histogram counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

pub const DEFAULT_BINS: usize = 120;
pub const DEFAULT_DEGREE: usize = 7;
const MAX_ITER: usize = 100;

/// Legendre values `P_0..P_deg` at `t`.
fn legendre(t: f64, deg: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if deg >= 1 {
        out[1] = t;
    }
    for k in 2..=deg {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * t * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Fitted `f(z)`: exp of a degree-`degree` polynomial over the data range,
/// log-linear decay beyond it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LindseyDensity {
    lo: f64,
    hi: f64,
    degree: usize,
    beta: Vec<f64>,
    log_norm: f64,
    left_slope: f64,
    right_slope: f64,
    centers: Vec<f64>,
    counts: Vec<f64>,
    iterations: usize,
}

impl LindseyDensity {
    pub fn fit(z: &[f64], bins: usize, degree: usize) -> Result<Self> {
        if z.len() < 50 {
            return Err(Error::InvalidInput(format!("density fit needs N >= 50, got {}", z.len())));
        }
        if bins <= degree + 1 {
            return Err(Error::Config("need more bins than polynomial terms".into()));
        }
        let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::InvalidInput("density fit on a constant sample".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0.0; bins];
        for &v in z {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1.0;
        }
        let centers: Vec<f64> = (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
        let k = degree + 1;
        let mut design = vec![0.0; bins * k];
        for (b, row) in design.chunks_mut(k).enumerate() {
            legendre(to_unit(centers[b], lo, hi), degree, row);
        }

        let mut beta = vec![0.0; k];
        beta[0] = (z.len() as f64 / bins as f64).ln();
        let mut dev_old = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        for it in 0..MAX_ITER {
            iterations = it + 1;
            let mut xtwx = vec![0.0; k * k];
            let mut xtwz = vec![0.0; k];
            for (b, row) in design.chunks(k).enumerate() {
                let eta: f64 = row.iter().zip(&beta).map(|(a, c)| a * c).sum();
                let mu = eta.exp();
                let work = eta + (counts[b] - mu) / mu;
                for r in 0..k {
                    xtwz[r] += mu * row[r] * work;
                    for c in 0..k {
                        xtwx[r * k + c] += mu * row[r] * row[c];
                    }
                }
            }
            beta = linalg::solve_spd(&xtwx, k, &xtwz)
                .ok_or_else(|| Error::NonConvergence("density fit: singular weighted design".into()))?;
            let dev = deviance(&design, k, &beta, &counts);
            if !dev.is_finite() {
                return Err(Error::NonConvergence("density fit diverged".into()));
            }
            if (dev_old - dev).abs() <= 1e-10 * (dev.abs() + 1.0) {
                converged = true;
                break;
            }
            dev_old = dev;
        }
        if !converged {
            return Err(Error::NonConvergence(format!("density fit did not converge in {MAX_ITER} iterations")));
        }

        let mut out = Self {
            lo,
            hi,
            degree,
            beta,
            log_norm: 0.0,
            left_slope: 0.0,
            right_slope: 0.0,
            centers,
            counts,
            iterations,
        };
        let h = 1e-4 * (hi - lo);
        out.left_slope = ((out.log_poly(lo + h) - out.log_poly(lo)) / h).max(1e-3);
        out.right_slope = ((out.log_poly(hi) - out.log_poly(hi - h)) / h).min(-1e-3);
        let grid = out.grid();
        let vals: Vec<f64> = grid.iter().map(|&g| out.log_unnormalized(g).exp()).collect();
        out.log_norm = stats::trapezoid(&grid, &vals).ln();
        Ok(out)
    }

    fn log_poly(&self, v: f64) -> f64 {
        let mut p = vec![0.0; self.degree + 1];
        legendre(to_unit(v, self.lo, self.hi), self.degree, &mut p);
        p.iter().zip(&self.beta).map(|(a, b)| a * b).sum()
    }

    fn log_unnormalized(&self, v: f64) -> f64 {
        if v < self.lo {
            self.log_poly(self.lo) + self.left_slope * (v - self.lo)
        } else if v > self.hi {
            self.log_poly(self.hi) + self.right_slope * (v - self.hi)
        } else {
            self.log_poly(v)
        }
    }

    /// The grid on which the density integrates to one: 1001 points
    /// spanning the data range.
    pub fn grid(&self) -> Vec<f64> {
        stats::linspace(self.lo, self.hi, 1001)
    }

    pub fn pdf(&self, v: f64) -> f64 {
        (self.log_unnormalized(v) - self.log_norm).exp()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn to_unit(v: f64, lo: f64, hi: f64) -> f64 {
    2.0 * (v - lo) / (hi - lo) - 1.0
}

fn deviance(design: &[f64], k: usize, beta: &[f64], counts: &[f64]) -> f64 {
    design
        .chunks(k)
        .zip(counts)
        .map(|(row, &y)| {
            let mu = row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp();
            let t = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
            2.0 * (t - (y - mu))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn standard_normal_peak() {
        let mut rng = RngStream::new(1, 0).rng();
        let z: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let f = LindseyDensity::fit(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
        assert!((f.pdf(0.0) - 0.39894).abs() < 0.03);
        let g = f.grid();
        let v: Vec<f64> = g.iter().map(|&x| f.pdf(x)).collect();
        assert!((stats::trapezoid(&g, &v) - 1.0).abs() < 1e-6);
        assert!(f.pdf(20.0) < f.pdf(f.range().1));
        assert!(f.pdf(-20.0) < f.pdf(f.range().0));
    }

    #[test]
    fn uniform_degree_zero() {
        let mut rng = RngStream::new(2, 0).rng();
        let z: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let f = LindseyDensity::fit(&z, DEFAULT_BINS, 0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((f.pdf(x) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn bimodal_has_two_modes() {
        let mut rng = RngStream::new(3, 0).rng();
        let z: Vec<f64> = (0..10_000)
            .map(|i| {
                let e: f64 = rng.sample(StandardNormal);
                if i % 2 == 0 {
                    e - 3.0
                } else {
                    e + 3.0
                }
            })
            .collect();
        let f = LindseyDensity::fit(&z, DEFAULT_BINS, DEFAULT_DEGREE).unwrap();
        let g = stats::linspace(-6.0, 6.0, 241);
        let v: Vec<f64> = g.iter().map(|&x| f.pdf(x)).collect();
        let peaks = (1..v.len() - 1).filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1]).count();
        assert_eq!(peaks, 2);
    }

    #[test]
    fn small_sample_rejected() {
        assert!(LindseyDensity::fit(&[0.0; 10], 120, 7).is_err());
    }
}
