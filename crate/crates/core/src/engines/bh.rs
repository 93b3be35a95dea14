//! Benjamini-Hochberg step-up procedure.

use crate::error::{Error, Result};

fn check(p: &[f64]) -> Result<()> {
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput(format!("p-value {} at index {i} outside [0, 1]", p[i])));
    }
    Ok(())
}

fn order(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    idx
}

/// Indices (ascending) of the `k` smallest p-values, with
/// `k = max{i : p_(i) <= alpha i / N}`.
pub fn bh_procedure(p: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check(p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    let n = p.len() as f64;
    let idx = order(p);
    let k = idx.iter().enumerate().rev().find(|(r, &i)| p[i] <= alpha * (r + 1) as f64 / n).map_or(0, |(r, _)| r + 1);
    // Ties at the cutoff value are all rejected.
    let cut = if k > 0 { p[idx[k - 1]] } else { -1.0 };
    let mut out: Vec<usize> = (0..p.len()).filter(|&i| p[i] <= cut).collect();
    out.sort_unstable();
    Ok(out)
}

/// BH-adjusted p-values: `q_(i) = min_{j >= i} min(1, N p_(j) / j)`.
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check(p)?;
    let n = p.len() as f64;
    let idx = order(p);
    let mut q = vec![0.0; p.len()];
    let mut running = 1.0f64;
    for (r, &i) in idx.iter().enumerate().rev() {
        running = running.min(p[i] * n / (r + 1) as f64).min(1.0);
        q[i] = running;
    }
    Ok(q)
}
