mod common;

use common::slope;
use echo_core::analytic::fringe_decay_rate;
use echo_core::observables::fringe_amplitude;
use echo_core::phase_space::{
    make_cat_state, make_gaussian_state, purity, wigner_transform, DensityMatrix, FftPair, WaveFunction, WignerFunction,
};
use echo_core::propagate::{
    evolve_master, evolve_master_with, evolve_unitary, evolve_unitary_with, CouplingFunction, HamiltonianSpec,
    Perturbation, Potential, SourceSeries,
};
use echo_core::{Evolution, Grid};
use nalgebra::DMatrix;

fn frozen_free() -> HamiltonianSpec<f64> {
    HamiltonianSpec::new(f64::INFINITY, Potential::Free).unwrap()
}

fn energy(h: &HamiltonianSpec<f64>, psi: &WaveFunction<f64>, fft: &FftPair<f64>) -> f64 {
    let g = psi.grid();
    let kin: f64 = psi
        .momentum_density(fft)
        .iter()
        .enumerate()
        .map(|(k, w)| w * g.momentum(k).powi(2))
        .sum::<f64>()
        * g.dp()
        / (2.0 * h.mass);
    let pot: f64 =
        psi.amplitudes().iter().enumerate().map(|(j, a)| a.norm_sqr() * h.static_potential(g.position(j))).sum::<f64>()
            * g.dx();
    kin + pot
}

/// Centred second moments `(var x, cov xp, var p)` of a Wigner function.
fn wigner_moments(w: &WignerFunction<f64>) -> (f64, f64, f64) {
    let g = w.grid();
    let xs = g.positions();
    let ps = g.momenta_ascending();
    let cell = g.dx() * g.dp();
    let mut m = [0.0; 5];
    for ((i, j), v) in w.values().indexed_iter() {
        let (x, p) = (xs[i], ps[j]);
        m[0] += v * x;
        m[1] += v * p;
        m[2] += v * x * x;
        m[3] += v * x * p;
        m[4] += v * p * p;
    }
    let m = m.map(|s| s * cell);
    (m[2] - m[0] * m[0], m[3] - m[0] * m[1], m[4] - m[1] * m[1])
}

#[test]
fn norm_is_kept_over_thousands_of_driven_noisy_steps() {
    let g = Grid::new(256, -5.5, 5.5, 0.2).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::default_double_well());
    let params = Evolution::new(8e-5, 0.4, 1000).unwrap();
    let psi0 = make_gaussian_state(&g, 0.0, 0.0, 0.1f64.sqrt()).unwrap();
    let w: Vec<f64> = (0..5000).map(|k| 0.01 * ((k as f64) * 0.37).sin()).collect();
    let coupling = CouplingFunction::Position;
    let pert = Perturbation { coupling: &coupling, series: SourceSeries::Impulse(&w) };
    let mut last = 1.0;
    evolve_unitary_with(&psi0, &h, &params, Some(pert), |_, _, s| {
        // 1000 steps between checkpoints
        assert!((s.norm_sq() - last).abs() < 1e-10);
        last = s.norm_sq();
        Ok(())
    })
    .unwrap();
    assert!((last - 1.0).abs() < 1e-10);
}

#[test]
fn inverted_oscillator_spreading_follows_the_closed_form() {
    let hbar = 0.1;
    let (lambda, s0) = (1.0, 0.2);
    let g = Grid::new(2048, -20.0, 20.0, hbar).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::InvertedOscillator { lambda0: lambda });
    let params = Evolution::new(5e-5, 3.0, 2000).unwrap();
    let psi0 = make_gaussian_state(&g, 0.0, 0.0, s0).unwrap();
    let traj = evolve_unitary(&psi0, &h, &params, None).unwrap();
    let sp0 = hbar / (2.0 * s0);
    for (t, psi) in traj.times.iter().zip(&traj.states) {
        let lt = lambda * t;
        let exact = (s0 * s0 * lt.cosh().powi(2) + (sp0 / lambda).powi(2) * lt.sinh().powi(2)).sqrt();
        let got = psi.variance_x().sqrt();
        assert!((got / exact - 1.0).abs() < 1e-4, "t = {t}: {got} vs {exact}");
    }
}

#[test]
fn energy_drift_is_small_at_dt_1e_3() {
    let g = Grid::new(64, -8.0, 8.0, 1.0).unwrap();
    let fft = FftPair::new(64);
    let h = HamiltonianSpec::unit_mass(Potential::Harmonic { omega: 1.0 });
    let params = Evolution::new(1e-3, 10.0, 100).unwrap();
    let psi0 = make_gaussian_state(&g, 1.0, 0.5, 0.8).unwrap();
    let e0 = energy(&h, &psi0, &fft);
    let traj = evolve_unitary(&psi0, &h, &params, None).unwrap();
    let rel: Vec<f64> = traj.states.iter().map(|s| (energy(&h, s, &fft) - e0) / e0).collect();
    let drift = slope(&traj.times, &rel).abs();
    assert!(drift < 1e-6, "drift {drift:e} per unit time");
    let worst = rel.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn splitting_is_second_order() {
    let g = Grid::new(64, -8.0, 8.0, 1.0).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::Harmonic { omega: 1.0 });
    let psi0 = make_gaussian_state(&g, 2.0, 0.0, 1.0).unwrap();
    let error = |dt: f64| {
        let params = Evolution::new(dt, 20.0, (1.0 / dt).round() as usize).unwrap();
        let traj = evolve_unitary(&psi0, &h, &params, None).unwrap();
        // <x> = x0 cos t exactly for a quadratic Hamiltonian
        traj.times.iter().zip(&traj.states).map(|(t, s)| (s.mean_x() - 2.0 * t.cos()).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (error(1e-3), error(5e-4));
    let ratio = e1 / e2;
    assert!(e1 > 1e-7, "{e1:e}");
    assert!((ratio - 4.0).abs() < 0.4, "{e1:e} {e2:e} ratio {ratio}");
}

#[test]
fn wigner_moments_follow_the_covariance_equations() {
    let (omega, d) = (1.0, 0.1);
    let g = Grid::new(64, -8.0, 8.0, 1.0).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::Harmonic { omega });
    let params = Evolution::new(1e-3, 2.0, 250).unwrap();
    let psi0 = make_gaussian_state(&g, 1.0, 0.0, 0.8).unwrap();
    let traj = evolve_master(&DensityMatrix::from_pure(&psi0), &h, &CouplingFunction::Position, d, &params).unwrap();

    // d(vx, c, vp)/dt = (2c, vp - w^2 vx, -2 w^2 c + 2 D hbar^2), by RK4
    let rhs = |y: [f64; 3]| [2.0 * y[1], y[2] - omega * omega * y[0], -2.0 * omega * omega * y[1] + 2.0 * d];
    let mut y = [0.64, 0.0, 1.0 / (4.0 * 0.64)];
    let h_ode = 1e-4;
    let mut t_ode = 0.0;
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        while t_ode < t - 1e-12 {
            let k1 = rhs(y);
            let k2 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h_ode * k1[i]));
            let k3 = rhs(std::array::from_fn(|i| y[i] + 0.5 * h_ode * k2[i]));
            let k4 = rhs(std::array::from_fn(|i| y[i] + h_ode * k3[i]));
            y = std::array::from_fn(|i| y[i] + h_ode / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            t_ode += h_ode;
        }
        let (vx, c, vp) = wigner_moments(&wigner_transform(rho));
        for (got, want) in [(vx, y[0]), (c, y[1]), (vp, y[2])] {
            assert!((got - want).abs() < 1e-4, "t = {t}: {got} vs {want}");
        }
    }
}

#[test]
fn frozen_momentum_variance_grows_linearly() {
    let d = 0.25;
    let g = Grid::new(128, -8.0, 8.0, 1.0).unwrap();
    let fft = FftPair::new(128);
    let params = Evolution::new(1e-3, 1.5, 100).unwrap();
    let psi0 = make_gaussian_state(&g, 0.0, 0.0, 1.0).unwrap();
    let traj =
        evolve_master(&DensityMatrix::from_pure(&psi0), &frozen_free(), &CouplingFunction::Position, d, &params).unwrap();
    let v0 = traj.states[0].variance_p(&fft);
    let v_end = traj.states.last().unwrap().variance_p(&fft);
    assert!(v_end.sqrt() >= 2.0 * v0.sqrt() - 1e-9);
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let want = v0 + 2.0 * d * t;
        assert!((rho.variance_p(&fft) / want - 1.0).abs() < 0.01);
        // the position distribution does not move
        assert!((rho.variance_x() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn cat_fringes_wash_out_at_d_kp_squared() {
    let (d, sep) = (0.05, 4.0);
    let g = Grid::new(128, -8.0, 8.0, 1.0).unwrap();
    let params = Evolution::new(1e-3, 3.0, 100).unwrap();
    let cat = make_cat_state(&g, 0.0, sep, 0.6).unwrap();
    let k_p = sep / g.hbar();
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    evolve_master_with(&DensityMatrix::from_pure(&cat), &frozen_free(), &CouplingFunction::Position, d, &params, |_, t, r| {
        ts.push(t);
        logs.push(fringe_amplitude(&wigner_transform(r), 0.0, k_p).ln());
        Ok(())
    })
    .unwrap();
    // at least a decade of decay
    assert!(logs[0] - logs.last().unwrap() > std::f64::consts::LN_10);
    let rate = -slope(&ts, &logs);
    let want = fringe_decay_rate(d, k_p);
    assert!((rate / want - 1.0).abs() < 0.05, "{rate} vs {want}");
}

#[test]
fn master_step_keeps_trace_and_never_raises_purity() {
    let g = Grid::new(64, -8.0, 8.0, 1.0).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::DoubleWell { a4: 0.05, a2: 1.0, drive_amp: 1.0, drive_freq: 1.3 });
    let params = Evolution::new(5e-4, 1.0, 1).unwrap();
    let psi0 = make_cat_state(&g, 0.0, 3.0, 0.8).unwrap();
    let mut last = 1.0 + 1e-12;
    let mut final_rho = None;
    evolve_master_with(&DensityMatrix::from_pure(&psi0), &h, &CouplingFunction::Position, 0.3, &params, |_, _, r| {
        assert!((r.trace() - 1.0).abs() < 1e-8);
        assert!(r.hermiticity_error() < 1e-8);
        let p = purity(r);
        assert!(p <= last + 1e-10);
        last = p;
        final_rho = Some(r.clone());
        Ok(())
    })
    .unwrap();
    assert!(last < 0.9);
    let rho = final_rho.unwrap();
    let m = DMatrix::from_fn(64, 64, |i, j| {
        let c = rho.elements()[[i, j]] * g.dx();
        nalgebra::Complex::new(c.re, c.im)
    });
    assert!(m.symmetric_eigenvalues().min() >= -1e-8);
}

#[test]
fn time_dependent_drive_is_taken_at_the_midpoint() {
    // a uniform force F(t) = -A cos(w t) on a free particle: <p>(t) = -A sin(w t) / w
    let (amp, w) = (0.5, 2.0);
    let g = Grid::new(256, -16.0, 16.0, 1.0).unwrap();
    let fft = FftPair::new(256);
    // a4 tiny so the well barely acts over the run
    let h = HamiltonianSpec::unit_mass(Potential::DoubleWell { a4: 1e-12, a2: 1e-12, drive_amp: amp, drive_freq: w });
    let params = Evolution::new(2.5e-4, 2.0, 400).unwrap();
    let psi0 = make_gaussian_state(&g, 0.0, 0.0, 1.0).unwrap();
    let traj = evolve_unitary(&psi0, &h, &params, None).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let want = -amp * (w * t).sin() / w;
        assert!((s.mean_p(&fft) - want).abs() < 1e-5, "t = {t}");
    }
}
