#![allow(dead_code)]

use echo_core::phase_space::{make_gaussian_state, DensityMatrix, PhaseSpaceGrid, WaveFunction};
use num_complex::Complex;
use proptest::prelude::*;

/// One Gaussian packet of a random superposition.
#[derive(Debug, Clone, Copy)]
pub struct Packet {
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub re: f64,
    pub im: f64,
}

pub fn packet() -> impl Strategy<Value = Packet> {
    (-2.5..2.5f64, -2.0..2.0f64, 0.5..1.1f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(x0, p0, sigma, re, im)| Packet { x0, p0, sigma, re, im })
}

/// Superpositions of 1 to 3 packets, mixed with 1 to 3 weights.
pub fn mixture_spec() -> impl Strategy<Value = Vec<(f64, Vec<Packet>)>> {
    prop::collection::vec((0.1..1.0f64, prop::collection::vec(packet(), 1..=3)), 1..=3)
}

pub fn superposition(g: &PhaseSpaceGrid<f64>, packets: &[Packet]) -> WaveFunction<f64> {
    let n = g.n_points();
    let mut amps = vec![Complex::new(0.0, 0.0); n];
    for p in packets {
        let psi = make_gaussian_state(g, p.x0, p.p0, p.sigma).unwrap();
        // keep the coefficient away from zero so the sum never vanishes
        let c = Complex::new(p.re + 1.5f64.copysign(p.re), p.im);
        for (a, b) in amps.iter_mut().zip(psi.amplitudes()) {
            *a += c * b;
        }
    }
    WaveFunction::normalized(*g, amps).unwrap()
}

pub fn density(g: &PhaseSpaceGrid<f64>, spec: &[(f64, Vec<Packet>)]) -> DensityMatrix<f64> {
    let states: Vec<_> = spec.iter().map(|(w, ps)| (*w, superposition(g, ps))).collect();
    let refs: Vec<_> = states.iter().map(|(w, s)| (*w, s)).collect();
    DensityMatrix::mixture(&refs).unwrap()
}

/// Plain least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
