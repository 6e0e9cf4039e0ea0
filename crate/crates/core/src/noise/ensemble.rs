//! Monte-Carlo echo ensembles and the master-equation reference run.
//!
//! All realizations are held in memory and advanced together, one checkpoint
//! interval at a time, by a parallel map. Every reduction over realizations
//! runs in index order, so results do not depend on the thread count.

use ndarray::Array2;
use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EchoError, Result};
use crate::observables::{sigma_bar_with, sigma_echo_with, DecayTrace};
use crate::phase_space::wave::inner_product;
use crate::phase_space::{wigner_transform_with, DensityMatrix, FftPair, WaveFunction};
use crate::propagate::split::check_leakage;
use crate::propagate::{CouplingFunction, EvolutionParams, HamiltonianSpec, MasterStepper, SourceSeries, SplitStepper};
use crate::propagate::LEAKAGE_CELLS;
use crate::scalar::Real;

use super::process::{gaussian, realization_rng, NoiseKernel, NoiseProcess};
use super::stats::RunningStats;

/// What to compute besides the echo.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleOptions {
    /// Purity of the average state and its error bars.
    pub purity: bool,
    /// `sigma_bar` and `sigma_echo` from Wigner functions at every checkpoint
    /// (builds `rho_bar` each time).
    pub diagnostics: bool,
    /// Steps at which `rho_bar` is built and handed to the observer.
    pub rho_bar_steps: Vec<usize>,
}

impl EnsembleOptions {
    pub fn with_purity() -> Self {
        Self { purity: true, ..Self::default() }
    }
}

/// State handed to the checkpoint observer.
#[derive(Debug)]
pub struct Checkpoint<'a, T> {
    pub step: usize,
    pub time: T,
    /// Unperturbed state `U0 |psi0>`.
    pub psi0: &'a WaveFunction<T>,
    /// Average perturbed state, when built at this step.
    pub rho_bar: Option<&'a DensityMatrix<T>>,
}

struct Member<T: Real> {
    psi: Vec<Complex<T>>,
    rng: ChaCha8Rng,
    scratch: Vec<Complex<T>>,
    impulses: Vec<T>,
    amplitude: T,
}

#[derive(Default)]
struct Columns {
    times: Vec<f64>,
    m_bar: Vec<f64>,
    m_stderr: Vec<f64>,
    purity: Vec<f64>,
    purity_stderr: Vec<f64>,
    purity_unbiased: Vec<f64>,
    margin_stderr: Vec<f64>,
    sigma_bar: Vec<f64>,
    sigma_echo: Vec<f64>,
}

impl Columns {
    fn into_trace(self, purity: bool, diagnostics: bool, metadata: serde_json::Value) -> DecayTrace {
        DecayTrace {
            times: self.times,
            m_bar: self.m_bar,
            m_stderr: self.m_stderr,
            purity: purity.then_some(self.purity),
            purity_stderr: purity.then_some(self.purity_stderr),
            purity_unbiased: purity.then_some(self.purity_unbiased),
            margin_stderr: purity.then_some(self.margin_stderr),
            sigma_bar: diagnostics.then_some(self.sigma_bar),
            sigma_echo: diagnostics.then_some(self.sigma_echo),
            metadata,
        }
    }

    fn push_diagnostics<T: Real>(&mut self, psi0: &WaveFunction<T>, rho: &DensityMatrix<T>, fft: &FftPair<T>) {
        let w_bar = wigner_transform_with(rho, fft);
        let w0 = wigner_transform_with(&DensityMatrix::from_pure(psi0), fft);
        self.sigma_bar.push(sigma_bar_with(&w_bar, fft).map_or(f64::NAN, |v| v.as_f64()));
        self.sigma_echo.push(sigma_echo_with(&w0, &w_bar, fft).map_or(f64::NAN, |v| v.sigma.as_f64()));
    }
}

/// `|<a|b>|^2 / (<a|a> <b|b>)`.
fn normalized_fidelity<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> f64 {
    let ab = inner_product(a, b);
    let aa = inner_product(a, a).re;
    let bb = inner_product(b, b).re;
    (ab.norm_sqr() / (aa * bb)).as_f64()
}

/// `(1/R) sum_r |psi_r><psi_r|`, rows built in parallel, realizations summed
/// in index order.
fn average_state<T: Real>(psi0: &WaveFunction<T>, members: &[Member<T>]) -> Result<DensityMatrix<T>> {
    let n = psi0.grid().n_points();
    let inv_r = T::one() / T::from_usize_exact(members.len());
    let mut elements = Array2::<Complex<T>>::zeros((n, n));
    elements
        .as_slice_mut()
        .unwrap()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            for m in members {
                let a = m.psi[i] * inv_r;
                for (v, b) in row.iter_mut().zip(&m.psi) {
                    *v = *v + a * b.conj();
                }
            }
        });
    DensityMatrix::from_elements_unchecked(*psi0.grid(), elements)
}

/// Purity statistics from the Gram matrix `G_rs = <psi_r|psi_s> dx`:
/// returns `h_r = (1/R) sum_s |G_rs|^2` and `sum_r |G_rr|^2`.
fn gram_rows<T: Real>(members: &[Member<T>], dx: T) -> (Vec<f64>, f64) {
    let r = members.len();
    let dx2 = (dx * dx).as_f64();
    // upper triangle, one row per task
    let upper: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|a| {
            (a..r)
                .map(|b| inner_product(&members[a].psi, &members[b].psi).norm_sqr().as_f64() * dx2)
                .collect()
        })
        .collect();
    let mut h = vec![0.0; r];
    let mut diag = 0.0;
    for a in 0..r {
        for (k, g) in upper[a].iter().enumerate() {
            let b = a + k;
            if k == 0 {
                h[a] += g;
                diag += g;
            } else {
                h[a] += g;
                h[b] += g;
            }
        }
    }
    let inv = 1.0 / r as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    (h, diag)
}

/// Monte-Carlo ensemble average of the echo `|<psi0(t)|psi_J(t)>|^2` and,
/// with `options.purity`, of the purity of the average state.
pub fn run_echo_ensemble_with<T, F>(
    psi0: &WaveFunction<T>,
    h: &HamiltonianSpec<T>,
    process: &NoiseProcess<T>,
    params: &EvolutionParams<T>,
    options: &EnsembleOptions,
    mut observer: F,
) -> Result<DecayTrace>
where
    T: Real,
    F: FnMut(&Checkpoint<'_, T>) -> Result<()>,
{
    process.validate()?;
    let r = process.n_realizations;
    if r < 2 {
        return Err(EchoError::InvalidInput("an ensemble needs at least 2 realizations".into()));
    }
    let grid = *psi0.grid();
    let stepper = SplitStepper::new(&grid, h, params, Some(&process.coupling))?;
    let checkpoints = params.checkpoint_steps()?;
    let scale = process.draw_scale(params.dt, grid.hbar());
    let flat = matches!(process.kernel, NoiseKernel::Flat { .. });
    let mut members: Vec<Member<T>> = (0..r)
        .map(|i| {
            let mut rng = realization_rng(process.seed, i);
            let amplitude = if flat { gaussian(&mut rng, scale) } else { T::zero() };
            Member {
                psi: psi0.amplitudes().to_vec(),
                rng,
                scratch: stepper.make_scratch(),
                impulses: Vec::new(),
                amplitude,
            }
        })
        .collect();
    let mut base = psi0.clone();
    let mut base_scratch = stepper.make_scratch();
    let fft = FftPair::new(grid.n_points());
    let mut cols = Columns::default();
    let mut done = 0;
    for &step in &checkpoints {
        let count = step - done;
        stepper.advance(base.amplitudes_mut(), &mut base_scratch, done, count, None);
        members.par_iter_mut().for_each(|m| {
            if flat {
                stepper.advance(&mut m.psi, &mut m.scratch, done, count, Some(SourceSeries::Constant(m.amplitude)));
            } else {
                m.impulses.clear();
                for _ in 0..count {
                    let w = gaussian(&mut m.rng, scale);
                    m.impulses.push(w);
                }
                stepper.advance(&mut m.psi, &mut m.scratch, done, count, Some(SourceSeries::Impulse(&m.impulses)));
            }
        });
        done = step;
        let t = params.time_of_step(step);
        check_leakage(base.boundary_probability(LEAKAGE_CELLS), t, params.leakage_tolerance)?;
        let n = grid.n_points();
        let leaks: Vec<T> = members
            .par_iter()
            .map(|m| crate::phase_space::wave::boundary_weight(m.psi.iter().map(|z| z.norm_sqr()), n, LEAKAGE_CELLS) * grid.dx())
            .collect();
        for (i, p) in leaks.iter().enumerate() {
            check_leakage(*p, t, params.leakage_tolerance)
                .map_err(|e| EchoError::Realization { index: i, source: Box::new(e) })?;
        }

        let m: Vec<f64> = if step == 0 {
            vec![1.0; r]
        } else {
            members.par_iter().map(|m| normalized_fidelity(base.amplitudes(), &m.psi)).collect()
        };
        let ms = RunningStats::from_slice(&m);
        cols.times.push(t.as_f64());
        cols.m_bar.push(ms.mean());
        cols.m_stderr.push(ms.stderr());

        if options.purity {
            let (hr, diag) = gram_rows(&members, grid.dx());
            let hs = RunningStats::from_slice(&hr);
            let p = hs.mean();
            let rf = r as f64;
            cols.purity.push(p);
            cols.purity_stderr.push(2.0 * hs.stderr());
            cols.purity_unbiased.push((rf * rf * p - diag) / (rf * (rf - 1.0)));
            let mean_m = ms.mean();
            let lin: Vec<f64> = hr.iter().zip(&m).map(|(a, b)| 2.0 * a - 2.0 * mean_m * b).collect();
            cols.margin_stderr.push(RunningStats::from_slice(&lin).stderr());
        }

        let want_rho = options.diagnostics || options.rho_bar_steps.contains(&step);
        let rho_bar = if want_rho { Some(average_state(&base, &members)?) } else { None };
        if options.diagnostics {
            cols.push_diagnostics(&base, rho_bar.as_ref().unwrap(), &fft);
        }
        observer(&Checkpoint { step, time: t, psi0: &base, rho_bar: rho_bar.as_ref() })?;
    }
    let metadata = serde_json::json!({
        "solver": "ensemble",
        "n_realizations": r,
        "seed": process.seed,
        "kernel": match process.kernel {
            NoiseKernel::White { diffusion_d } => serde_json::json!({"white": {"diffusion_d": diffusion_d.as_f64()}}),
            NoiseKernel::Flat { variance_nu0 } => serde_json::json!({"flat": {"variance_nu0": variance_nu0.as_f64()}}),
        },
    });
    Ok(cols.into_trace(options.purity, options.diagnostics, metadata))
}

/// [`run_echo_ensemble_with`] with purity and no observer.
pub fn run_echo_ensemble<T: Real>(
    psi0: &WaveFunction<T>,
    h: &HamiltonianSpec<T>,
    process: &NoiseProcess<T>,
    params: &EvolutionParams<T>,
) -> Result<DecayTrace> {
    run_echo_ensemble_with(psi0, h, process, params, &EnsembleOptions::with_purity(), |_| Ok(()))
}

/// Echo `Tr(rho(t) rho0(t))` and purity from the white-noise master equation,
/// the exact ensemble limit of [`run_echo_ensemble`]. The observer sees `rho`
/// at every checkpoint.
pub fn run_master_echo<T, F>(
    psi0: &WaveFunction<T>,
    h: &HamiltonianSpec<T>,
    coupling: &CouplingFunction<T>,
    diffusion_d: T,
    params: &EvolutionParams<T>,
    diagnostics: bool,
    mut observer: F,
) -> Result<DecayTrace>
where
    T: Real,
    F: FnMut(&Checkpoint<'_, T>) -> Result<()>,
{
    let grid = *psi0.grid();
    let master = MasterStepper::new(&grid, h, coupling, diffusion_d, params)?;
    let unitary = SplitStepper::new(&grid, h, params, None)?;
    let mut ms = master.make_scratch();
    let mut us = unitary.make_scratch();
    let fft = FftPair::new(grid.n_points());
    let mut rho = DensityMatrix::from_pure(psi0).into_elements();
    let mut base = psi0.clone();
    let mut cols = Columns::default();
    let mut done = 0;
    for step in params.checkpoint_steps()? {
        master.advance(&mut rho, &mut ms, done, step - done);
        unitary.advance(base.amplitudes_mut(), &mut us, done, step - done, None);
        done = step;
        let t = params.time_of_step(step);
        let state = DensityMatrix::from_elements_unchecked(grid, rho)?;
        check_leakage(state.boundary_probability(LEAKAGE_CELLS), t, params.leakage_tolerance)?;
        check_leakage(base.boundary_probability(LEAKAGE_CELLS), t, params.leakage_tolerance)?;
        let m = state.expectation_in(&base)?.as_f64().clamp(0.0, 1.0 + 1e-8);
        let p = crate::phase_space::purity(&state).as_f64();
        cols.times.push(t.as_f64());
        cols.m_bar.push(m);
        cols.m_stderr.push(0.0);
        cols.purity.push(p);
        cols.purity_stderr.push(0.0);
        cols.purity_unbiased.push(p);
        cols.margin_stderr.push(0.0);
        if diagnostics {
            cols.push_diagnostics(&base, &state, &fft);
        }
        observer(&Checkpoint { step, time: t, psi0: &base, rho_bar: Some(&state) })?;
        rho = state.into_elements();
    }
    let metadata = serde_json::json!({
        "solver": "master",
        "diffusion_d": diffusion_d.as_f64(),
    });
    Ok(cols.into_trace(true, diagnostics, metadata))
}

/// `purity - m_bar^2` per checkpoint with its Monte-Carlo error and the
/// indices where it falls below `-3` error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityMargin {
    pub margin: Vec<f64>,
    pub stderr: Vec<f64>,
    pub violations: Vec<usize>,
}

impl InequalityMargin {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn inequality_margin(trace: &DecayTrace) -> Result<InequalityMargin> {
    let purity = trace.purity.as_ref().ok_or(EchoError::MissingSeries("purity"))?;
    if purity.len() != trace.m_bar.len() {
        return Err(EchoError::MissingSeries("purity (length mismatch)"));
    }
    let margin: Vec<f64> = purity.iter().zip(&trace.m_bar).map(|(p, m)| p - m * m).collect();
    let stderr: Vec<f64> = match &trace.margin_stderr {
        Some(s) => s.clone(),
        None => {
            let ps = trace.purity_stderr.clone().unwrap_or_else(|| vec![0.0; margin.len()]);
            trace
                .m_bar
                .iter()
                .zip(&trace.m_stderr)
                .zip(&ps)
                .map(|((m, sm), sp)| ((2.0 * m * sm).powi(2) + sp * sp).sqrt())
                .collect()
        }
    };
    // round-off allowance for exact (error-free) traces
    let violations = margin
        .iter()
        .zip(&stderr)
        .enumerate()
        .filter(|(_, (v, s))| **v < -3.0 * **s - 1e-12)
        .map(|(i, _)| i)
        .collect();
    Ok(InequalityMargin { margin, stderr, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_realization;
    use crate::phase_space::{make_gaussian_state, purity, PhaseSpaceGrid};
    use crate::propagate::{evolve_unitary, Perturbation, Potential};

    fn setup(d: f64, r: usize) -> (WaveFunction<f64>, HamiltonianSpec<f64>, NoiseProcess<f64>, EvolutionParams<f64>) {
        let g = PhaseSpaceGrid::new(64, -8.0, 8.0, 1.0).unwrap();
        let psi = make_gaussian_state(&g, 0.5, 0.0, 0.8).unwrap();
        let h = HamiltonianSpec::unit_mass(Potential::Harmonic { omega: 1.0 });
        let proc = NoiseProcess {
            kernel: NoiseKernel::White { diffusion_d: d },
            coupling: CouplingFunction::Position,
            seed: 11,
            n_realizations: r,
        };
        let params = EvolutionParams::new(1e-3, 0.4, 50).unwrap();
        (psi, h, proc, params)
    }

    #[test]
    fn zero_noise_keeps_echo_and_purity_at_one() {
        let (psi, h, proc, params) = setup(0.0, 3);
        let tr = run_echo_ensemble(&psi, &h, &proc, &params).unwrap();
        assert_eq!(tr.m_bar[0], 1.0);
        for (m, p) in tr.m_bar.iter().zip(tr.purity.as_ref().unwrap()) {
            assert!((m - 1.0).abs() < 1e-10 && (p - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn members_match_independently_sampled_realizations() {
        let (psi, h, proc, params) = setup(0.3, 3);
        let tr = run_echo_ensemble(&psi, &h, &proc, &params).unwrap();
        let n = params.n_steps().unwrap();
        let base = evolve_unitary(&psi, &h, &params, None).unwrap();
        let mut per: Vec<Vec<f64>> = Vec::new();
        for i in 0..3 {
            let s = sample_realization(&proc, i, n, params.dt, 1.0).unwrap();
            let pert = Perturbation { coupling: &proc.coupling, series: SourceSeries::Impulse(s.values()) };
            let traj = evolve_unitary(&psi, &h, &params, Some(pert)).unwrap();
            per.push(traj.states.iter().zip(&base.states).map(|(a, b)| a.fidelity(b).unwrap()).collect());
        }
        for k in 0..tr.len() {
            let mean = per.iter().map(|v| v[k]).sum::<f64>() / 3.0;
            assert!((tr.m_bar[k] - mean).abs() < 1e-10, "{k}: {} vs {mean}", tr.m_bar[k]);
        }
        assert!(tr.m_bar.last().unwrap() < &0.99);
    }

    #[test]
    fn gram_purity_equals_purity_of_the_average_state() {
        let (psi, h, proc, params) = setup(0.3, 4);
        let last = params.n_steps().unwrap();
        let mut direct = None;
        let opts = EnsembleOptions { purity: true, diagnostics: false, rho_bar_steps: vec![last] };
        let tr = run_echo_ensemble_with(&psi, &h, &proc, &params, &opts, |c| {
            if let Some(rho) = c.rho_bar {
                direct = Some(purity(rho));
                assert!((rho.trace() - 1.0).abs() < 1e-10);
            }
            Ok(())
        })
        .unwrap();
        let p = *tr.purity.as_ref().unwrap().last().unwrap();
        assert!((p - direct.unwrap()).abs() < 1e-12);
        let pu = *tr.purity_unbiased.as_ref().unwrap().last().unwrap();
        assert!(pu < p);
    }

    #[test]
    fn same_seed_same_trace() {
        let (psi, h, proc, params) = setup(0.2, 5);
        let a = run_echo_ensemble(&psi, &h, &proc, &params).unwrap();
        let b = run_echo_ensemble(&psi, &h, &proc, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_realization_is_rejected() {
        let (psi, h, proc, params) = setup(0.2, 1);
        assert!(matches!(run_echo_ensemble(&psi, &h, &proc, &params), Err(EchoError::InvalidInput(_))));
    }

    #[test]
    fn master_echo_obeys_the_inequality_exactly() {
        let (psi, h, proc, params) = setup(0.3, 2);
        let tr = run_master_echo(&psi, &h, &proc.coupling, 0.3, &params, true, |_| Ok(())).unwrap();
        let rep = inequality_margin(&tr).unwrap();
        assert!(rep.holds());
        assert!(tr.m_bar.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(tr.sigma_bar.as_ref().unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn margin_needs_purity() {
        let tr = DecayTrace::exact(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(inequality_margin(&tr).unwrap_err(), EchoError::MissingSeries("purity"));
    }
}
