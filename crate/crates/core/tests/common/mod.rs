#![allow(dead_code)]

use laser_core::stats;

/// Asymptotic two-sample Kolmogorov-Smirnov p-value.
pub fn ks_p_value(a: &[f64], b: &[f64]) -> f64 {
    let a = stats::sorted(a);
    let b = stats::sorted(b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    // The series converges too slowly near zero, where Q is 1 anyway.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut q = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        q += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    q.clamp(0.0, 1.0)
}

/// Rejects `{i : p_i <= alpha R / N}` with `R` the largest `k` such that at
/// least `k` p-values fall at or below `alpha k / N`.
pub fn brute_force_bh(p: &[f64], alpha: f64) -> Vec<usize> {
    let n = p.len();
    let r = (1..=n).rev().find(|&k| p.iter().filter(|&&v| v <= alpha * k as f64 / n as f64).count() >= k);
    match r {
        Some(k) => (0..n).filter(|&i| p[i] <= alpha * k as f64 / n as f64).collect(),
        None => Vec::new(),
    }
}

/// Largest deviation of the in-sample Gram matrix from the identity, and
/// of the column means from zero.
pub fn gram_error(b: &laser_core::lp::LpBasis) -> f64 {
    let n = b.n() as f64;
    let m = b.m();
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let mean: f64 = (0..b.n()).map(|i| b.row(i)[j]).sum::<f64>() / n;
        worst = worst.max(mean.abs());
        for k in j..m {
            let ip: f64 = (0..b.n()).map(|i| b.row(i)[j] * b.row(i)[k]).sum::<f64>() / n;
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}
