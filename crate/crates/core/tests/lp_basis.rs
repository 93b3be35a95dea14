use laser_core::lp::{empirical_cdf, LpBasis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

mod common;
use common::gram_error;

fn sample(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orthonormal_on_random_samples(seed in any::<u64>(), n_idx in 0usize..3, m in 2usize..=8) {
        let n = [50, 500, 5000][n_idx];
        let b = LpBasis::build(&sample(seed, n), m).unwrap();
        prop_assert!(gram_error(&b) < 1e-6, "gram error {}", gram_error(&b));
    }

    #[test]
    fn rank_invariant_under_monotone_maps(seed in any::<u64>(), m in 1usize..=6) {
        let z = sample(seed, 400);
        let g: Vec<f64> = z.iter().map(|v| (0.7 * v).exp() + v * v * v).collect();
        let a = LpBasis::build(&z, m).unwrap();
        let b = LpBasis::build(&g, m).unwrap();
        for i in 0..z.len() {
            for j in 0..m {
                prop_assert!((a.row(i)[j] - b.row(i)[j]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn in_sample_evaluation_matches_rows(seed in any::<u64>()) {
        let z = sample(seed, 300);
        let b = LpBasis::build(&z, 6).unwrap();
        for i in (0..z.len()).step_by(17) {
            prop_assert_eq!(b.evaluate(z[i]), b.row(i).to_vec());
        }
    }
}

#[test]
fn orthonormal_with_ties() {
    let z: Vec<f64> = (0..600).map(|i| ((i * 31) % 40) as f64).collect();
    let b = LpBasis::build(&z, 8).unwrap();
    assert!(gram_error(&b) < 1e-10);
}

#[test]
fn midrank_examples() {
    assert_eq!(empirical_cdf(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    assert_eq!(empirical_cdf(&[1.0, 1.0, 2.0]).unwrap(), vec![0.5, 0.5, 1.0]);
    assert!(empirical_cdf(&[]).is_err());
}

#[test]
fn median_is_near_center() {
    let z = sample(9, 2001);
    let b = LpBasis::build(&z, 4).unwrap();
    let mut s = z.clone();
    s.sort_by(f64::total_cmp);
    let t1 = b.evaluate(s[1000])[0];
    assert!(t1.abs() < 2.0 / (z.len() as f64).sqrt());
}

#[test]
fn below_minimum_clamps_to_first_half_step() {
    let z = sample(4, 200);
    let b = LpBasis::build(&z, 3).unwrap();
    let n = z.len() as f64;
    assert_eq!(b.evaluate(-1e9), b.eval_u(1.0 / (2.0 * n)));
    assert_eq!(b.evaluate(1e9), b.eval_u(1.0 - 1.0 / (2.0 * n)));
}
