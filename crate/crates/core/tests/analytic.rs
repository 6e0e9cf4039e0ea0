use echo_core::analytic::{
    chaotic_sea_lyapunov, io_echo_exact, io_long_time_rate, lyapunov_benettin_with, BenettinOptions, IOEchoParams,
};
use echo_core::propagate::Potential;
use echo_core::Hamiltonian;
use proptest::prelude::*;

fn io(lambda: f64, r: f64, t: f64) -> f64 {
    io_echo_exact(&IOEchoParams::from_r(lambda, r).unwrap(), t).unwrap()
}

proptest! {
    #[test]
    fn io_echo_depends_on_lambda_t_only(r in 0.0..2.0f64, lambda in 0.1..3.0f64, t in 0.0..5.0f64, c in 0.2..5.0f64) {
        let a = io(lambda, r, t);
        let b = io(c * lambda, r, t / c);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn io_echo_is_monotone(r in 0.001..2.0f64, t in 0.001..5.0f64, dt in 0.001..1.0f64, dr in 0.001..1.0f64) {
        prop_assert!(io(1.0, r, t + dt) <= io(1.0, r, t));
        prop_assert!(io(1.0, r + dr, t) <= io(1.0, r, t));
    }

    #[test]
    fn io_rate_is_lambda(lambda in 0.01..10.0f64, r in 0.001..10.0f64) {
        prop_assert_eq!(io_long_time_rate(&IOEchoParams::from_r(lambda, r).unwrap()).unwrap(), lambda);
    }
}

#[test]
fn benettin_does_not_depend_on_the_renormalization_interval() {
    let h = Hamiltonian::unit_mass(Potential::default_double_well());
    let opts = BenettinOptions { dt: 1e-4, ..BenettinOptions::default() };
    let a = lyapunov_benettin_with(&h, 0.5, 2.0, 100.0, 0.2, &opts).unwrap();
    let b = lyapunov_benettin_with(&h, 0.5, 2.0, 100.0, 0.1, &opts).unwrap();
    assert!(a.lambda > 0.1, "{a:?}");
    assert!((a.lambda - b.lambda).abs() <= 3.0 * a.stderr.max(b.stderr), "{a:?} {b:?}");
    assert_eq!(b.n_renormalizations, 1000);
}

#[test]
fn chaotic_sea_reference_is_well_determined() {
    let h = Hamiltonian::unit_mass(Potential::default_double_well());
    let opts = BenettinOptions { dt: 1e-4, ..BenettinOptions::default() };
    let est = chaotic_sea_lyapunov(&h, (-4.0, 4.0), (-8.0, 8.0), 20, 1, 100.0, 0.1, &opts).unwrap();
    assert_eq!(est.accepted.len(), 20);
    assert!(est.lambda_star > 0.0);
    assert!(est.stderr / est.lambda_star < 0.1, "{} +- {}", est.lambda_star, est.stderr);
    for (_, _, e) in &est.accepted {
        assert!(e.lambda > 2.0 * e.stderr);
    }
    // same seed, same answer
    let again = chaotic_sea_lyapunov(&h, (-4.0, 4.0), (-8.0, 8.0), 20, 1, 100.0, 0.1, &opts).unwrap();
    assert_eq!(est, again);
}
