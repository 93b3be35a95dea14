//! Least squares through the Gram matrix, with criterion-based selection.
//!
//! All regressions in this crate have modest column counts and many rows,
//! so each design is summarized once by `X'X` and candidate sub-models are
//! solved from it directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Bic,
    Aic,
    None,
}

impl std::str::FromStr for Selector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(Self::Bic),
            "aic" => Ok(Self::Aic),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown selector {other:?}"))),
        }
    }
}

impl Selector {
    fn penalty(self, n: usize) -> f64 {
        match self {
            Selector::Bic => (n as f64).ln(),
            Selector::Aic => 2.0,
            Selector::None => 0.0,
        }
    }
}

/// Gram summary of an intercept-plus-terms design.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    k: usize,
    g: Vec<f64>,
    names: Vec<String>,
}

impl Gram {
    /// `columns` excludes the intercept, which is added as column 0.
    pub fn new(columns: &[Vec<f64>], names: &[String]) -> Self {
        let n = columns.first().map_or(0, Vec::len);
        let k = columns.len() + 1;
        let mut g = vec![0.0; k * k];
        g[0] = n as f64;
        for (a, ca) in columns.iter().enumerate() {
            let s: f64 = ca.iter().sum();
            g[a + 1] = s;
            g[(a + 1) * k] = s;
            for (b, cb) in columns.iter().enumerate().skip(a) {
                let v: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                g[(a + 1) * k + b + 1] = v;
                g[(b + 1) * k + a + 1] = v;
            }
        }
        let mut all = vec!["(intercept)".to_string()];
        all.extend(names.iter().cloned());
        Self { n, k, g, names: all }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> usize {
        self.k - 1
    }

    /// Fails naming the terms that make the full design singular.
    pub fn check_full_rank(&self) -> Result<()> {
        let mut kept: Vec<usize> = Vec::new();
        let mut bad: Vec<String> = Vec::new();
        for c in 0..self.k {
            let mut trial = kept.clone();
            trial.push(c);
            if self.sub_cholesky(&trial).is_ok() {
                kept.push(c);
            } else {
                bad.push(self.names[c].clone());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::SingularDesign { terms: bad })
        }
    }

    fn sub_matrix(&self, idx: &[usize]) -> Vec<f64> {
        let s = idx.len();
        let mut a = vec![0.0; s * s];
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                a[i * s + j] = self.g[r * self.k + c];
            }
        }
        a
    }

    fn sub_cholesky(&self, idx: &[usize]) -> std::result::Result<Vec<f64>, usize> {
        linalg::cholesky(&self.sub_matrix(idx), idx.len(), 1e-10)
    }

    /// `X'y` for all columns (intercept first).
    pub fn cross(&self, columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k);
        out.push(y.iter().sum());
        for c in columns {
            out.push(c.iter().zip(y).map(|(a, b)| a * b).sum());
        }
        out
    }

    /// Coefficients and residual sum of squares of the sub-model `idx`
    /// (indices into intercept-plus-terms).
    pub fn fit_subset(&self, xty: &[f64], yty: f64, idx: &[usize]) -> Option<(Vec<f64>, f64)> {
        let l = self.sub_cholesky(idx).ok()?;
        let rhs: Vec<f64> = idx.iter().map(|&i| xty[i]).collect();
        let beta = linalg::cholesky_solve(&l, idx.len(), &rhs);
        let explained: f64 = beta.iter().zip(&rhs).map(|(b, r)| b * r).sum();
        Some((beta, (yty - explained).max(0.0)))
    }
}

/// Outcome of one response regression: selected term indices (1-based into
/// intercept-plus-terms) with coefficients; `intercept` separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub terms: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.terms.iter().zip(&self.coefficients).map(|(&t, b)| b * row[t - 1]).sum::<f64>()
    }
}

fn criterion(n: usize, rss: f64, params: usize, penalty: f64) -> f64 {
    let nf = n as f64;
    nf * (rss.max(1e-300) / nf).ln() + penalty * params as f64
}

/// Regression of `y` on the design. `Selector::None` fits every term;
/// otherwise the full fit is kept only when it beats the intercept-only
/// model on the criterion, and the response is dropped as a whole if not.
pub fn fit(gram: &Gram, xty: &[f64], yty: f64, selector: Selector) -> Result<LinearFit> {
    let n = gram.n;
    let idx: Vec<usize> = (0..gram.k).collect();
    let (beta, rss) = gram
        .fit_subset(xty, yty, &idx)
        .ok_or_else(|| gram.check_full_rank().err().unwrap_or(Error::Numerical("singular design".into())))?;
    let full = LinearFit { intercept: beta[0], terms: idx[1..].to_vec(), coefficients: beta[1..].to_vec(), rss };
    if selector == Selector::None {
        return Ok(full);
    }
    let (b0, rss0) = gram.fit_subset(xty, yty, &[0]).ok_or_else(|| Error::Numerical("empty design".into()))?;
    let penalty = selector.penalty(n);
    if criterion(n, rss, gram.k, penalty) < criterion(n, rss0, 1, penalty) {
        Ok(full)
    } else {
        Ok(LinearFit { intercept: b0[0], terms: Vec::new(), coefficients: Vec::new(), rss: rss0 })
    }
}

/// Ordinary least squares of `y` on all `columns` plus an intercept.
pub fn ols(columns: &[Vec<f64>], names: &[String], y: &[f64]) -> Result<LinearFit> {
    let gram = Gram::new(columns, names);
    gram.check_full_rank()?;
    let xty = gram.cross(columns, y);
    let yty = y.iter().map(|v| v * v).sum();
    fit(&gram, &xty, yty, Selector::None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(std::slice::from_ref(&x), &["x".into()], &y).unwrap();
        assert!((f.intercept - 2.0).abs() < 1e-9);
        assert!((f.coefficients[0] + 0.5).abs() < 1e-11);
        assert!(f.rss < 1e-12);
    }

    #[test]
    fn collinear_terms_named() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let y = a.clone();
        match ols(&[a, b], &["a".into(), "b".into()], &y) {
            Err(Error::SingularDesign { terms }) => assert_eq!(terms, vec!["b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn design(n: usize, signal: f64) -> (Gram, Vec<f64>, f64) {
        let a: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 7919) % 113) as f64 / 56.0 - 1.0).collect();
        let other: Vec<f64> = (0..n).map(|i| ((i * 104_729) % 97) as f64 / 48.0 - 1.0).collect();
        let y: Vec<f64> = a.iter().zip(&noise).map(|(u, e)| signal * u + 0.3 * e).collect();
        let cols = vec![a, other];
        let g = Gram::new(&cols, &["a".to_string(), "other".to_string()]);
        let xty = g.cross(&cols, &y);
        let yty = y.iter().map(|v| v * v).sum();
        (g, xty, yty)
    }

    #[test]
    fn selection_keeps_or_drops_whole_response() {
        let (g, xty, yty) = design(2000, 0.8);
        assert_eq!(fit(&g, &xty, yty, Selector::Bic).unwrap().terms, vec![1, 2]);
        let (g, xty, yty) = design(2000, 0.0);
        let f = fit(&g, &xty, yty, Selector::Bic).unwrap();
        assert!(f.terms.is_empty());
        assert_eq!(fit(&g, &xty, yty, Selector::None).unwrap().terms, vec![1, 2]);
    }
}
