//! Empirical rank-polynomial (LP) orthonormal systems.
//!
//! `T_j` is a degree-`j` polynomial in the empirical rank variable
//! `u = F~(z)`, orthonormal with respect to the empirical measure of the
//! sample and orthogonal to constants. `T_1` is the standardized rank.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_M: usize = 6;

/// Midrank empirical cdf: `F~(z_i) = midrank(z_i) / N`.
pub fn empirical_cdf(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::InvalidInput("empirical cdf of an empty sample".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in sample".into()));
    }
    let n = z.len() as f64;
    Ok(stats::midranks(z).into_iter().map(|r| r / n).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpBasis {
    m: usize,
    sorted: Vec<f64>,
    /// Midrank u at each sorted position.
    sorted_u: Vec<f64>,
    /// Sample u in original order.
    u: Vec<f64>,
    center: f64,
    scale: f64,
    /// `coefs[j]`: monomial coefficients (ascending) of `T_{j+1}` in the
    /// standardized rank `s = (u - center) / scale`.
    coefs: Vec<Vec<f64>>,
    /// In-sample values, row-major `N x m`, original order.
    values: Vec<f64>,
}

impl LpBasis {
    pub fn build(z: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("basis size m must be >= 1".into()));
        }
        let u = empirical_cdf(z)?;
        let n = z.len();
        let distinct = stats::distinct_count(z);
        if distinct <= m {
            return Err(Error::RankDeficient { distinct, requested: m });
        }
        let center = stats::mean(&u);
        let var = u.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / n as f64;
        let scale = var.sqrt();
        let s: Vec<f64> = u.iter().map(|v| (v - center) / scale).collect();

        let inner = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n as f64 };

        // q[0] is the constant function; q[k] is T_k.
        let mut q: Vec<Vec<f64>> = vec![vec![1.0; n]];
        let mut c: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 1..=m {
            // s * T_{k-1}: degree k, better conditioned than raw s^k.
            let mut v: Vec<f64> = q[k - 1].iter().zip(&s).map(|(a, b)| a * b).collect();
            let mut cv = vec![0.0; k + 1];
            for (i, a) in c[k - 1].iter().enumerate() {
                cv[i + 1] = *a;
            }
            let start_norm = inner(&v, &v).sqrt();
            for _pass in 0..2 {
                for l in 0..k {
                    let r = inner(&v, &q[l]);
                    for (vi, qi) in v.iter_mut().zip(&q[l]) {
                        *vi -= r * qi;
                    }
                    for (i, a) in c[l].iter().enumerate() {
                        cv[i] -= r * a;
                    }
                }
            }
            let norm = inner(&v, &v).sqrt();
            if !(norm > 1e-9 * start_norm.max(1.0)) {
                return Err(Error::RankDeficient { distinct, requested: m });
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cv.iter_mut().for_each(|x| *x /= norm);
            q.push(v);
            c.push(cv);
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
        let sorted = order.iter().map(|&i| z[i]).collect();
        let sorted_u = order.iter().map(|&i| u[i]).collect();
        let mut basis = Self { m, sorted, sorted_u, u, center, scale, coefs: c.split_off(1), values: Vec::new() };
        // Stored values come from the polynomials so that in-sample and
        // out-of-sample evaluation agree bit for bit.
        let mut values = vec![0.0; n * m];
        for (i, row) in values.chunks_mut(m).enumerate() {
            basis.eval_u_into(basis.u[i], row);
        }
        basis.values = values;
        Ok(basis)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted
    }

    /// u of each sorted sample point.
    pub fn sorted_ranks(&self) -> &[f64] {
        &self.sorted_u
    }

    /// In-sample u, original order.
    pub fn ranks(&self) -> &[f64] {
        &self.u
    }

    /// In-sample `(T_1(z_i), ..., T_m(z_i))`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// In-sample values of `T_j` (1-based `j`).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.values[i * self.m + j - 1]).collect()
    }

    /// Monomial coefficients of `T_j` (1-based) in the standardized rank.
    pub fn polynomial(&self, j: usize) -> &[f64] {
        &self.coefs[j - 1]
    }

    /// u for an arbitrary score: the midrank for sample values, otherwise
    /// `#{z_i <= z} / N` clamped to `[1/(2N), 1 - 1/(2N)]`.
    pub fn rank_of(&self, z: f64) -> f64 {
        let n = self.n();
        let less = self.sorted.partition_point(|v| *v < z);
        let le = self.sorted.partition_point(|v| *v <= z);
        if le > less {
            return self.sorted_u[less];
        }
        let nf = n as f64;
        (le as f64 / nf).clamp(0.5 / nf, 1.0 - 0.5 / nf)
    }

    pub fn eval_u(&self, u: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.eval_u_into(u, &mut out);
        out
    }

    pub fn eval_u_into(&self, u: f64, out: &mut [f64]) {
        let s = (u - self.center) / self.scale;
        for (o, c) in out.iter_mut().zip(&self.coefs) {
            *o = c.iter().rev().fold(0.0, |acc, a| acc * s + a);
        }
    }

    pub fn evaluate(&self, z: f64) -> Vec<f64> {
        self.eval_u(self.rank_of(z))
    }

    /// Sum over `j` of `coef[j] * T_{j+1}(u)`.
    pub fn combine(&self, coef: &[f64], u: f64) -> f64 {
        let s = (u - self.center) / self.scale;
        coef.iter()
            .zip(&self.coefs)
            .filter(|(a, _)| **a != 0.0)
            .map(|(a, c)| a * c.iter().rev().fold(0.0, |acc, b| acc * s + b))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_examples() {
        assert_eq!(empirical_cdf(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(empirical_cdf(&[1.0, 1.0, 2.0]).unwrap(), vec![0.5, 0.5, 1.0]);
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn three_point_t1() {
        let b = LpBasis::build(&[5.0, 1.0, 3.0], 1).unwrap();
        let t: Vec<f64> = (0..3).map(|i| b.row(i)[0]).collect();
        let r = 1.5f64.sqrt();
        assert!((t[0] - r).abs() < 1e-12);
        assert!((t[1] + r).abs() < 1e-12);
        assert!(t[2].abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency() {
        assert!(matches!(LpBasis::build(&[1.0, 2.0, 3.0], 3), Err(Error::RankDeficient { distinct: 3, requested: 3 })));
        assert!(matches!(LpBasis::build(&[1.0, 1.0, 2.0, 2.0], 2), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn evaluation_rules() {
        let z: Vec<f64> = (0..101).map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.01).collect();
        let b = LpBasis::build(&z, 4).unwrap();
        for i in [0, 17, 50, 100] {
            assert_eq!(b.evaluate(z[i]), b.row(i).to_vec());
        }
        let below = b.evaluate(-1e6);
        let at = b.eval_u(0.5 / 101.0);
        assert_eq!(below, at);
        let med = stats::quantile(&z, 0.5);
        assert!(b.evaluate(med)[0].abs() < 2.0 / (101f64).sqrt());
    }

    #[test]
    fn degree_structure() {
        let z: Vec<f64> = (0..200).map(|i| ((i * 7919) % 200) as f64).collect();
        let b = LpBasis::build(&z, 8).unwrap();
        for j in 1..=8 {
            let p = b.polynomial(j);
            assert_eq!(p.len(), j + 1);
            assert!(p[j].abs() > 1e-8);
        }
    }
}
