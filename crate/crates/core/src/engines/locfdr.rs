//! Local false discovery rate `fdr(z) = pi0 f0(z) / f(z)`.

use serde::{Deserialize, Serialize};

use crate::engines::lindsey::{LindseyDensity, DEFAULT_BINS, DEFAULT_DEGREE};
use crate::engines::null::{fit_empirical_null, EmpiricalNull, NullWindow};
use crate::error::Result;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocfdrConfig {
    pub bins: usize,
    pub degree: usize,
    pub window: NullWindow,
}

impl Default for LocfdrConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS, degree: DEFAULT_DEGREE, window: NullWindow::default() }
    }
}

/// Fitted components, evaluable at any z.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocfdrFit {
    pub null: EmpiricalNull,
    pub density: LindseyDensity,
}

impl LocfdrFit {
    pub fn fit(z: &[f64], config: &LocfdrConfig) -> Result<Self> {
        let null = fit_empirical_null(z, config.window)?;
        let density = LindseyDensity::fit(z, config.bins, config.degree)?;
        Ok(Self { null, density })
    }

    pub fn fdr(&self, z: f64) -> f64 {
        let f = self.density.pdf(z);
        let num = self.null.pi0 * self.null.pdf(z);
        if f > 0.0 {
            (num / f).min(1.0)
        } else {
            1.0
        }
    }

    pub fn curve(&self, grid: &[f64]) -> FdrCurve {
        let f: Vec<f64> = grid.iter().map(|&z| self.density.pdf(z)).collect();
        let f0: Vec<f64> = grid.iter().map(|&z| self.null.pdf(z)).collect();
        let fdr = grid.iter().map(|&z| self.fdr(z)).collect();
        FdrCurve { z: grid.to_vec(), fdr, f, f0, null: self.null, shift: 0.0 }
    }

    /// Curve on 200 points over the fitted range.
    pub fn default_curve(&self) -> FdrCurve {
        let (lo, hi) = self.density.range();
        self.curve(&stats::linspace(lo, hi, 200))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrCurve {
    pub z: Vec<f64>,
    pub fdr: Vec<f64>,
    pub f: Vec<f64>,
    /// Null density values (multiply by `null.pi0` for the numerator).
    pub f0: Vec<f64>,
    pub null: EmpiricalNull,
    /// Amount added to the engine's grid to reach the reported z-domain.
    pub shift: f64,
}

impl FdrCurve {
    /// Same curve expressed in a domain shifted by `delta`.
    pub fn shifted(mut self, delta: f64) -> Self {
        self.z.iter_mut().for_each(|z| *z += delta);
        self.null.mu0 += delta;
        self.shift += delta;
        self
    }

    /// Linear interpolation of fdr at `z`, constant beyond the grid.
    pub fn interpolate(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z <= self.z[0] {
            return self.fdr[0];
        }
        if z >= self.z[n - 1] {
            return self.fdr[n - 1];
        }
        let j = self.z.partition_point(|g| *g < z);
        let t = (z - self.z[j - 1]) / (self.z[j] - self.z[j - 1]);
        self.fdr[j - 1] + t * (self.fdr[j] - self.fdr[j - 1])
    }
}

/// Fits the components on `z` and evaluates fdr on the default grid.
pub fn locfdr_curve(z: &[f64], config: &LocfdrConfig) -> Result<FdrCurve> {
    Ok(LocfdrFit::fit(z, config)?.default_curve())
}
