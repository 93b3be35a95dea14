//! Removing mean heterogeneity: `y_i = z_i - E[z | x_i]`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::regress;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjustMethod {
    /// Least-squares linear fit on the raw covariates.
    Ols,
    /// Mean of the nearest tenth of the sample in covariate rank space.
    Smoother,
}

impl std::str::FromStr for AdjustMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(Self::Ols),
            "smoother" => Ok(Self::Smoother),
            other => Err(Error::Config(format!("unknown adjustment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
enum MeanFit {
    Linear { intercept: f64, slopes: Vec<f64> },
    Neighbors { sorted: Vec<Vec<f64>>, coords: Vec<f64>, z: Vec<f64>, k: usize },
    Constant(f64),
}

#[derive(Debug, Clone)]
pub struct RegressionAdjustment {
    method: AdjustMethod,
    fit: MeanFit,
    residuals: Vec<f64>,
}

fn rank_in(sorted: &[f64], x: f64) -> f64 {
    let less = sorted.partition_point(|v| *v < x);
    let le = sorted.partition_point(|v| *v <= x);
    (less as f64 + ((le - less) as f64 + 1.0) / 2.0) / sorted.len() as f64
}

impl RegressionAdjustment {
    pub fn fit(data: &Dataset, method: AdjustMethod) -> Result<Self> {
        let n = data.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!("regression adjustment needs N >= 3, got {n}")));
        }
        let p = data.p();
        let fit = match method {
            AdjustMethod::Ols => {
                let cols: Vec<Vec<f64>> = (0..p).map(|c| data.x_column(c)).collect();
                let f = regress::ols(&cols, data.covariate_names(), data.z())?;
                MeanFit::Linear { intercept: f.intercept, slopes: f.coefficients }
            }
            AdjustMethod::Smoother => {
                let cols: Vec<Vec<f64>> = (0..p).map(|c| data.x_column(c)).collect();
                if cols.iter().all(|c| stats::distinct_count(c) < 2) {
                    MeanFit::Constant(stats::mean(data.z()))
                } else {
                    let sorted: Vec<Vec<f64>> = cols.iter().map(|c| stats::sorted(c)).collect();
                    let mut coords = Vec::with_capacity(n * p);
                    for i in 0..n {
                        for (s, col) in sorted.iter().zip(&cols) {
                            coords.push(rank_in(s, col[i]));
                        }
                    }
                    let k = (n / 10).max(3).min(n);
                    MeanFit::Neighbors { sorted, coords, z: data.z().to_vec(), k }
                }
            }
        };
        let mut out = Self { method, fit, residuals: Vec::new() };
        out.residuals = (0..n).map(|i| data.z()[i] - out.mean_at(data.x_row(i))).collect();
        Ok(out)
    }

    pub fn method(&self) -> AdjustMethod {
        self.method
    }

    /// `E[z | x]`.
    pub fn mean_at(&self, x: &[f64]) -> f64 {
        match &self.fit {
            MeanFit::Linear { intercept, slopes } => intercept + slopes.iter().zip(x).map(|(b, v)| b * v).sum::<f64>(),
            MeanFit::Constant(m) => *m,
            MeanFit::Neighbors { sorted, coords, z, k } => {
                let p = sorted.len();
                let t: Vec<f64> = sorted.iter().zip(x).map(|(s, v)| rank_in(s, *v)).collect();
                let mut d: Vec<(f64, usize)> = (0..z.len())
                    .map(|i| {
                        let dist =
                            coords[i * p..(i + 1) * p].iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                        (dist, i)
                    })
                    .collect();
                d.select_nth_unstable_by(*k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d[..*k].iter().map(|(_, i)| z[*i]).sum::<f64>() / *k as f64
            }
        }
    }

    /// `(intercept, slopes)` for the linear fit.
    pub fn coefficients(&self) -> Option<(f64, &[f64])> {
        match &self.fit {
            MeanFit::Linear { intercept, slopes } => Some((*intercept, slopes)),
            _ => None,
        }
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

pub fn regression_adjust(data: &Dataset, method: AdjustMethod) -> Result<RegressionAdjustment> {
    RegressionAdjustment::fit(data, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_slope_centers() {
        let x: Vec<f64> = (0..40).map(|i| (i % 4) as f64).collect();
        let z: Vec<f64> = (0..40).map(|i| ((i / 4) as f64) * 0.3).collect();
        let data = Dataset::from_columns(x, z.clone()).unwrap();
        let adj = regression_adjust(&data, AdjustMethod::Ols).unwrap();
        let (a, b) = adj.coefficients().unwrap();
        assert!(b[0].abs() < 1e-12);
        let m = stats::mean(&z);
        assert!((a - m).abs() < 1e-12);
        for (r, v) in adj.residuals().iter().zip(&z) {
            assert!((r - (v - m)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_mean_zero() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let z: Vec<f64> = x.iter().map(|v| 2.0 - 0.08 * v + (v * 1.7).sin()).collect();
        let data = Dataset::from_columns(x, z.clone()).unwrap();
        let adj = regression_adjust(&data, AdjustMethod::Ols).unwrap();
        assert!(stats::mean(adj.residuals()).abs() <= 1e-8 * stats::sd(&z));
    }

    #[test]
    fn smoother_constant_x_falls_back() {
        let data = Dataset::from_columns(vec![1.0; 10], (0..10).map(|i| i as f64).collect()).unwrap();
        let adj = regression_adjust(&data, AdjustMethod::Smoother).unwrap();
        assert_eq!(adj.mean_at(&[1.0]), 4.5);
    }

    #[test]
    fn smoother_tracks_trend() {
        let x: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let z: Vec<f64> = x.iter().map(|v| v / 100.0).collect();
        let data = Dataset::from_columns(x, z).unwrap();
        let adj = regression_adjust(&data, AdjustMethod::Smoother).unwrap();
        assert!((adj.mean_at(&[250.0]) - 2.5).abs() < 0.05);
    }
}
