use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vozcr::generate::mlpg_track;

/// Dense window matrix (3T × T), rows ordered static, Δ, Δ² per frame.
fn dense_windows(t_len: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(3 * t_len, t_len);
    let clamp = |i: isize| i.clamp(0, t_len as isize - 1) as usize;
    for t in 0..t_len {
        let ti = t as isize;
        w[(3 * t, t)] += 1.0;
        w[(3 * t + 1, clamp(ti + 1))] += 0.5;
        w[(3 * t + 1, clamp(ti - 1))] -= 0.5;
        w[(3 * t + 2, clamp(ti + 1))] += 1.0;
        w[(3 * t + 2, t)] -= 2.0;
        w[(3 * t + 2, clamp(ti - 1))] += 1.0;
    }
    w
}

fn dense_solve(means: &[[f64; 3]], vars: &[[f64; 3]]) -> DVector<f64> {
    let t_len = means.len();
    let w = dense_windows(t_len);
    let p = DMatrix::from_diagonal(&DVector::from_iterator(
        3 * t_len,
        vars.iter().flatten().map(|v| 1.0 / v),
    ));
    let mu = DVector::from_iterator(3 * t_len, means.iter().flatten().copied());
    let a = w.transpose() * &p * &w;
    let b = w.transpose() * &p * mu;
    a.cholesky().expect("positive definite").solve(&b)
}

fn random_system(seed: u64, t_len: usize) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = (0..t_len)
        .map(|_| {
            [
                rng.random_range(-3.0..3.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.3..0.3),
            ]
        })
        .collect();
    let vars = (0..t_len)
        .map(|_| {
            [
                rng.random_range(0.05..2.0),
                rng.random_range(0.01..1.0),
                rng.random_range(0.01..1.0),
            ]
        })
        .collect();
    (means, vars)
}

#[test]
fn six_frame_system_matches_dense_solve() {
    let (means, vars) = random_system(6, 6);
    let banded = mlpg_track(&means, &vars).unwrap();
    let dense = dense_solve(&means, &vars);
    for t in 0..6 {
        assert!(
            (banded[t] - dense[t]).abs() < 1e-8,
            "frame {t}: {} vs {}",
            banded[t],
            dense[t]
        );
    }
}

proptest! {
    #[test]
    fn banded_solver_matches_dense_oracle(seed in any::<u64>(), t_len in 1usize..=50) {
        let (means, vars) = random_system(seed, t_len);
        let banded = mlpg_track(&means, &vars).unwrap();
        let dense = dense_solve(&means, &vars);
        for t in 0..t_len {
            prop_assert!(banded[t].is_finite());
            prop_assert!((banded[t] - dense[t]).abs() < 1e-8);
        }
    }
}

#[test]
fn tighter_acceleration_variance_pulls_second_difference_to_its_mean() {
    let (means, mut vars) = random_system(42, 20);
    let t = 10;
    let target = means[t][2];
    let mut previous = f64::INFINITY;
    for var in [1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-6] {
        vars[t][2] = var;
        let c = mlpg_track(&means, &vars).unwrap();
        let gap = (c[t + 1] - 2.0 * c[t] + c[t - 1] - target).abs();
        assert!(
            gap < previous,
            "variance {var}: gap {gap} did not shrink from {previous}"
        );
        previous = gap;
    }
    assert!(previous < 1e-4);
}
