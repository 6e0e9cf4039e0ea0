mod common;

use common::{density, mixture_spec, superposition};
use echo_core::phase_space::{
    make_cat_state, make_gaussian_state, overlap_trace, overlap_trace_raw, purity, wigner_of_pure, wigner_transform,
    DensityMatrix, FftPair, PhaseSpaceGrid, WaveFunction,
};
use echo_core::propagate::{evolve_unitary, HamiltonianSpec, Potential, SplitStepper};
use echo_core::{Evolution, Grid};
use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;

fn grid128() -> Grid {
    Grid::new(128, -8.0, 8.0, 1.0).unwrap()
}

/// Wide enough that every chord of the random states fits in half the box.
fn wide() -> Grid {
    Grid::new(256, -16.0, 16.0, 1.0).unwrap()
}

#[test]
fn fourier_round_trip() {
    let g = grid128();
    let fft = FftPair::new(128);
    let psi = superposition(
        &g,
        &[
            common::Packet { x0: -1.0, p0: 2.0, sigma: 0.7, re: 0.3, im: 0.8 },
            common::Packet { x0: 2.0, p0: -1.0, sigma: 0.5, re: -0.4, im: 0.1 },
        ],
    );
    let phi = psi.to_momentum(&fft);
    let back = WaveFunction::from_momentum(g, &phi, &fft).unwrap();
    for (a, b) in psi.amplitudes().iter().zip(back.amplitudes()) {
        assert!((a - b).norm() < 1e-12);
    }
    let norm_p: f64 = phi.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dp();
    assert!((norm_p - 1.0).abs() < 1e-10);
}

#[test]
fn forward_backward_run_restores_the_state() {
    // conj(U conj(psi)) = U^-1 psi for a real, time-independent Hamiltonian
    let g = Grid::new(128, -6.0, 6.0, 1.0).unwrap();
    let h = HamiltonianSpec::unit_mass(Potential::DoubleWell { a4: 0.5, a2: 10.0, drive_amp: 0.0, drive_freq: 0.0 });
    let params = Evolution::new(1e-4, 1.0, 10_000).unwrap();
    let psi0 = make_gaussian_state(&g, -1.5, 0.0, 0.5).unwrap();
    let fwd = evolve_unitary(&psi0, &h, &params, None).unwrap();
    let mid = fwd.states.last().unwrap();
    assert!(mid.fidelity(&psi0).unwrap() < 0.5);
    let conj = |w: &WaveFunction<f64>| {
        WaveFunction::from_amplitudes(*w.grid(), w.amplitudes().iter().map(|c| c.conj()).collect()).unwrap()
    };
    let back = evolve_unitary(&conj(mid), &h, &params, None).unwrap();
    let restored = conj(back.states.last().unwrap());
    let o = overlap_trace(&DensityMatrix::from_pure(&psi0), &DensityMatrix::from_pure(&restored)).unwrap();
    assert!((o - 1.0).abs() < 1e-6, "{o}");
}

#[test]
fn stepper_matches_the_evolved_state_reading() {
    let g = grid128();
    let h = HamiltonianSpec::unit_mass(Potential::Harmonic { omega: 1.0 });
    let params = Evolution::new(2e-4, 0.5, 100).unwrap();
    let psi0 = make_gaussian_state(&g, 1.0, 0.0, 0.8).unwrap();
    let traj = evolve_unitary(&psi0, &h, &params, None).unwrap();
    let s = SplitStepper::new(&g, &h, &params, None).unwrap();
    let mut a = psi0.amplitudes().to_vec();
    let mut scratch = s.make_scratch();
    s.advance(&mut a, &mut scratch, 0, 2500, None);
    for (x, y) in a.iter().zip(traj.states.last().unwrap().amplitudes()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn mixtures_are_positive_semidefinite() {
    let g = Grid::new(64, -8.0, 8.0, 1.0).unwrap();
    let a = make_gaussian_state(&g, -2.0, 0.5, 1.2).unwrap();
    let b = make_cat_state(&g, 1.0, 3.0, 1.1).unwrap();
    let rho = DensityMatrix::mixture(&[(0.4, &a), (0.6, &b)]).unwrap();
    let n = g.n_points();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let c = rho.elements()[[i, j]] * g.dx();
        nalgebra::Complex::new(c.re, c.im)
    });
    let eig = m.symmetric_eigenvalues();
    assert!(eig.min() >= -1e-8, "{}", eig.min());
    assert!((eig.sum() - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn random_states_are_valid(spec in mixture_spec()) {
        let g = wide();
        let rho = density(&g, &spec);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-8);
        prop_assert!(purity(&rho) <= 1.0 + 1e-8);
    }

    #[test]
    fn wigner_marginals_match_the_density_matrix(spec in mixture_spec()) {
        let g = wide();
        let fft = FftPair::new(256);
        let rho = density(&g, &spec);
        let w = wigner_transform(&rho);
        prop_assert!((w.normalization() - 1.0).abs() < 1e-8);
        for (m, d) in w.position_marginal().iter().zip(rho.diagonal()) {
            prop_assert!((m - d).abs() < 1e-8);
        }
        let dens = rho.momentum_density(&fft);
        for (j, m) in w.momentum_marginal().iter().enumerate() {
            prop_assert!((m - dens[(j + 128) % 256]).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_representation_purity_and_overlap(a in mixture_spec(), b in mixture_spec()) {
        let g = wide();
        let ra = density(&g, &a);
        let rb = density(&g, &b);
        let wa = wigner_transform(&ra);
        let wb = wigner_transform(&rb);
        let p = purity(&ra);
        prop_assert!((wa.overlap(&wa).unwrap() - p).abs() < 1e-6 * p);
        prop_assert!((wa.overlap(&wb).unwrap() - overlap_trace_raw(&ra, &rb).unwrap().re).abs() < 1e-6);
    }

    #[test]
    fn overlap_is_symmetric_bilinear_and_bounded(
        a in mixture_spec(), b in mixture_spec(), c in mixture_spec(), w in 0.0..1.0f64,
    ) {
        let g = wide();
        let (ra, rb, rc) = (density(&g, &a), density(&g, &b), density(&g, &c));
        let ab = overlap_trace_raw(&ra, &rb).unwrap();
        let ba = overlap_trace_raw(&rb, &ra).unwrap();
        prop_assert!((ab - ba).norm() < 1e-12);
        prop_assert!(ab.im.abs() < 1e-10);
        let mix = rb.elements() * Complex::new(w, 0.0) + rc.elements() * Complex::new(1.0 - w, 0.0);
        let rm = DensityMatrix::from_elements(g, mix).unwrap();
        let lhs = overlap_trace_raw(&ra, &rm).unwrap().re;
        let rhs = w * ab.re + (1.0 - w) * overlap_trace_raw(&ra, &rc).unwrap().re;
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(overlap_trace(&ra, &ra).unwrap() <= 1.0 + 1e-8);
        prop_assert!(ab.re <= 1.0 + 1e-8);
    }

    #[test]
    fn pure_wigner_agrees_with_the_density_route(ps in prop::collection::vec(common::packet(), 1..=3)) {
        let g = wide();
        let psi = superposition(&g, &ps);
        let a = wigner_of_pure(&psi);
        let b = wigner_transform(&DensityMatrix::from_pure(&psi));
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn single_precision_aliases_work() {
    let g = echo_core::Grid32::new(64, -8.0, 8.0, 1.0).unwrap();
    let psi = make_gaussian_state(&g, 0.0f32, 0.0, 0.8).unwrap();
    assert!((psi.norm_sq() - 1.0).abs() < 1e-5);
    let w = wigner_of_pure(&psi);
    assert!((w.normalization() - 1.0).abs() < 1e-4);
    let _: PhaseSpaceGrid<f32> = g;
}
