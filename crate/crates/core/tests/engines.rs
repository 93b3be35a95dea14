use laser_core::engines::locfdr::{LocfdrConfig, LocfdrFit};
use laser_core::engines::npmle::{npmle_prior, posterior, NpmleConfig, Posterior, PriorEstimate};
use laser_core::engines::{bh_adjust, bh_procedure, LindseyDensity};
use laser_core::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

mod common;
use common::brute_force_bh;

#[test]
fn bh_matches_brute_force_oracle() {
    let mut r = ChaCha20Rng::seed_from_u64(17);
    for case in 0..1000 {
        let n = r.random_range(1..=200);
        let signal = r.random::<f64>();
        let p: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = if r.random::<f64>() < signal * 0.3 { r.random::<f64>() * 1e-3 } else { r.random() };
                // Coarse rounding on some vectors to produce ties.
                if case % 3 == 0 {
                    (v * 100.0).round() / 100.0
                } else {
                    v
                }
            })
            .collect();
        let alpha = [0.01, 0.05, 0.1, 0.2][case % 4];
        assert_eq!(bh_procedure(&p, alpha).unwrap(), brute_force_bh(&p, alpha), "case {case}");
    }
}

#[test]
fn bh_rejections_are_a_down_set() {
    let mut r = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p: Vec<f64> = (0..100).map(|_| r.random::<f64>().powi(3)).collect();
        let rej = bh_procedure(&p, 0.1).unwrap();
        if let Some(worst) = rej.iter().map(|&i| p[i]).reduce(f64::max) {
            for (i, v) in p.iter().enumerate() {
                assert_eq!(*v <= worst, rej.contains(&i));
            }
        }
        let q = bh_adjust(&p).unwrap();
        assert_eq!(rej, (0..p.len()).filter(|&i| q[i] <= 0.1).collect::<Vec<_>>());
    }
}

#[test]
fn bh_all_ones_rejects_nothing() {
    assert!(bh_procedure(&[1.0; 500], 0.05).unwrap().is_empty());
    assert!(bh_adjust(&[1.0; 5]).unwrap().iter().all(|&q| q == 1.0));
}

#[test]
fn npmle_loglik_is_monotone() {
    let mut r = ChaCha20Rng::seed_from_u64(8);
    let z: Vec<f64> = (0..3000)
        .map(|i| {
            let theta = if i % 10 == 0 { 3.0 } else { 0.0 };
            theta + r.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let prior = npmle_prior(&z, 1.0, &NpmleConfig::default()).unwrap();
    assert!(prior.loglik.len() > 2);
    for w in prior.loglik.windows(2) {
        assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
    assert!((prior.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn conjugate_posterior_mean_from_estimated_prior() {
    // theta ~ N(0, 1), z | theta ~ N(theta, 1): E[theta | z = 2] = 1.
    let mut r = ChaCha20Rng::seed_from_u64(21);
    let z: Vec<f64> =
        (0..10_000).map(|_| r.sample::<f64, _>(StandardNormal) + r.sample::<f64, _>(StandardNormal)).collect();
    let prior = npmle_prior(&z, 1.0, &NpmleConfig::default()).unwrap();
    let post = posterior(&prior, 2.0, 1.0, 0.2).unwrap();
    assert!((post.mean - 1.0).abs() <= 0.05, "posterior mean {}", post.mean);
}

#[test]
fn conjugate_posterior_matches_closed_form() {
    let grid = stats::linspace(-8.0, 8.0, 1601);
    let w: Vec<f64> = grid.iter().map(|t| stats::normal_pdf(*t, 0.0, 1.0)).collect();
    let s: f64 = w.iter().sum();
    let prior =
        PriorEstimate { grid, weights: w.iter().map(|v| v / s).collect(), sigma: 1.0, loglik: vec![], converged: true };
    for (z, sigma) in [(2.0, 1.0), (-1.3, 0.5), (3.7, 2.0)] {
        let post = posterior(&prior, z, sigma, 0.2).unwrap();
        let exact = z / (1.0 + sigma * sigma);
        assert!((post.mean - exact).abs() <= 0.02 * exact.abs(), "z={z}: {} vs {exact}", post.mean);
    }
}

#[test]
fn hpd_set_is_smallest_with_required_mass() {
    let mut r = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..50 {
        let grid = stats::linspace(-4.0, 4.0, 81);
        let mass: Vec<f64> = grid.iter().map(|_| r.random::<f64>().powi(4)).collect();
        let post = Posterior::from_mass(grid, mass, 0.2).unwrap();
        assert!(post.hpd_mass >= 0.8 - 1e-12);
        // Dropping the lightest member leaves less than the target.
        let lightest = post.hpd_set.iter().map(|&i| post.mass[i]).fold(f64::INFINITY, f64::min);
        assert!(post.hpd_mass - lightest < 0.8);
        // Every excluded point is no heavier than every included one.
        let heaviest_out =
            (0..post.mass.len()).filter(|i| !post.hpd_set.contains(i)).map(|i| post.mass[i]).fold(0.0, f64::max);
        assert!(heaviest_out <= lightest);
        assert!(post.hpd.0 <= post.mode && post.mode <= post.hpd.1);
    }
}

#[test]
fn lindsey_density_integrates_to_one() {
    let mut r = ChaCha20Rng::seed_from_u64(12);
    let z: Vec<f64> =
        (0..5000).map(|i| if i % 20 == 0 { 3.5 } else { 0.0 } + r.sample::<f64, _>(StandardNormal)).collect();
    let dens = LindseyDensity::fit(&z, 120, 7).unwrap();
    let (lo, hi) = dens.range();
    let grid = stats::linspace(lo, hi, 200_001);
    let f: Vec<f64> = grid.iter().map(|&v| dens.pdf(v)).collect();
    assert!(f.iter().all(|v| *v >= 0.0));
    assert!((stats::trapezoid(&grid, &f) - 1.0).abs() < 1e-6);
}

#[test]
fn locfdr_is_a_probability_and_small_in_the_tail() {
    let mut r = ChaCha20Rng::seed_from_u64(4);
    let z: Vec<f64> =
        (0..4000).map(|i| if i % 25 == 0 { 4.0 } else { 0.0 } + r.sample::<f64, _>(StandardNormal)).collect();
    let fit = LocfdrFit::fit(&z, &LocfdrConfig::default()).unwrap();
    for v in stats::linspace(-6.0, 8.0, 141) {
        let f = fit.fdr(v);
        assert!((0.0..=1.0).contains(&f), "fdr({v}) = {f}");
    }
    assert!(fit.fdr(0.0) > 0.9);
    assert!(fit.fdr(4.5) < 0.2);
    assert!((fit.null.mu0).abs() < 0.1 && (fit.null.sigma0 - 1.0).abs() < 0.1);
}
