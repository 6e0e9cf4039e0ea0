//! Strang split-operator propagation of pure states.
//!
//! One step from `t_n` to `t_n + dt` is
//! `K(dt/2) T(dt) K(dt/2)` with the kick
//! `K(tau) = exp(-i [V0(x, t_mid) + V(x) J_n] tau / hbar)`, `t_mid = t_n + dt/2`,
//! followed, for impulse sources, by `exp(-i V(x) W_n / hbar)`. Diagonal
//! factors of neighbouring steps are merged into a single pass.

use num_complex::Complex;

use crate::error::{EchoError, Result};
use crate::phase_space::{FftPair, PhaseSpaceGrid, WaveFunction};
use crate::scalar::{phase_factor, Real};

use super::hamiltonian::{CouplingFunction, HamiltonianSpec};
use super::params::{EvolutionParams, LEAKAGE_CELLS};

/// Exact phase every this many points when sweeping a linear phase.
const PHASE_BLOCK: usize = 32;

/// Per-step perturbation amplitudes seen by a propagator.
#[derive(Debug, Clone, Copy)]
pub enum SourceSeries<'a, T> {
    /// `J_n`, held over step `n` and applied with the kicks.
    Amplitude(&'a [T]),
    /// A time-independent `J`.
    Constant(T),
    /// White-noise increments `W_n = int J dt` over step `n`, applied as a
    /// kick `exp(-i V W_n / hbar)` at the end of the step.
    Impulse(&'a [T]),
}

impl<T: Real> SourceSeries<'_, T> {
    fn len(&self) -> Option<usize> {
        match self {
            SourceSeries::Amplitude(s) | SourceSeries::Impulse(s) => Some(s.len()),
            SourceSeries::Constant(_) => None,
        }
    }

    /// `(J_s, W_s)` for relative step `s`.
    #[inline]
    fn at(&self, s: usize) -> (T, T) {
        match self {
            SourceSeries::Amplitude(v) => (v[s], T::zero()),
            SourceSeries::Constant(j) => (*j, T::zero()),
            SourceSeries::Impulse(v) => (T::zero(), v[s]),
        }
    }
}

/// A perturbation `V(x) J(t)`.
#[derive(Debug, Clone, Copy)]
pub struct Perturbation<'a, T> {
    pub coupling: &'a CouplingFunction<T>,
    pub series: SourceSeries<'a, T>,
}

/// States at the checkpoints of a run.
#[derive(Debug, Clone)]
pub struct Trajectory<S, T> {
    pub times: Vec<T>,
    pub states: Vec<S>,
}

/// Multiplies `psi` by `exp(-i alpha x_j)` on the lattice `x_j = x0 + j dx`.
pub(crate) fn apply_linear_phase<T: Real>(psi: &mut [Complex<T>], alpha: T, x0: T, dx: T) {
    if alpha == T::zero() {
        return;
    }
    let step = phase_factor(alpha * dx);
    for (b, chunk) in psi.chunks_mut(PHASE_BLOCK).enumerate() {
        let mut e = phase_factor(alpha * (x0 + T::from_usize_exact(b * PHASE_BLOCK) * dx));
        for v in chunk {
            *v = *v * e;
            e = e * step;
        }
    }
}

/// Reusable propagator for one grid, Hamiltonian and time step.
#[derive(Debug, Clone)]
pub struct SplitStepper<T: Real> {
    grid: PhaseSpaceGrid<T>,
    h: HamiltonianSpec<T>,
    dt: T,
    fft: FftPair<T>,
    /// `exp(-i p^2 dt / 2 m hbar) / n` in FFT order; `None` when frozen.
    kinetic: Option<Vec<Complex<T>>>,
    half_static: Vec<Complex<T>>,
    full_static: Vec<Complex<T>>,
    /// Tabulated coupling values; `None` for `V(x) = x`.
    coupling: Option<Vec<T>>,
}

impl<T: Real> SplitStepper<T> {
    pub fn new(
        grid: &PhaseSpaceGrid<T>,
        h: &HamiltonianSpec<T>,
        params: &EvolutionParams<T>,
        coupling: Option<&CouplingFunction<T>>,
    ) -> Result<Self> {
        h.validate()?;
        params.check_stability(grid, h)?;
        let n = grid.n_points();
        let dt = params.dt;
        let hbar = grid.hbar();
        let two = T::lit(2.0);
        let inv_n = T::one() / T::from_usize_exact(n);
        let kinetic = (!h.frozen()).then(|| {
            (0..n)
                .map(|k| {
                    let p = grid.momentum(k);
                    phase_factor(p * p * dt / (two * h.mass * hbar)) * inv_n
                })
                .collect()
        });
        let vs: Vec<T> = grid.positions().into_iter().map(|x| h.static_potential(x)).collect();
        let half_static = vs.iter().map(|v| phase_factor(*v * dt / (two * hbar))).collect();
        let full_static = vs.iter().map(|v| phase_factor(*v * dt / hbar)).collect();
        let coupling = match coupling {
            None | Some(CouplingFunction::Position) => None,
            Some(c) => Some(c.values(grid)?),
        };
        Ok(Self {
            grid: *grid,
            h: *h,
            dt,
            fft: FftPair::new(n),
            kinetic,
            half_static,
            full_static,
            coupling,
        })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid<T> {
        &self.grid
    }

    pub fn make_scratch(&self) -> Vec<Complex<T>> {
        self.fft.make_scratch()
    }

    /// Diagonal factor `static * exp(-i (ax x + bc V))`.
    #[inline]
    fn apply_diagonal(&self, psi: &mut [Complex<T>], stat: &[Complex<T>], ax: T, bc: T) {
        for (v, s) in psi.iter_mut().zip(stat) {
            *v = *v * *s;
        }
        let (ax, bc) = match &self.coupling {
            None => (ax + bc, T::zero()),
            Some(_) => (ax, bc),
        };
        apply_linear_phase(psi, ax, self.grid.x_min(), self.grid.dx());
        if let (Some(c), true) = (&self.coupling, bc != T::zero()) {
            for (v, cv) in psi.iter_mut().zip(c) {
                *v = *v * phase_factor(bc * *cv);
            }
        }
    }

    #[inline]
    fn kinetic_step(&self, psi: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        if let Some(k) = &self.kinetic {
            self.fft.forward(psi, scratch);
            for (v, f) in psi.iter_mut().zip(k) {
                *v = *v * *f;
            }
            self.fft.inverse(psi, scratch);
        }
    }

    /// Half-kick coefficients `(x, V)` of absolute step `n` with amplitude `j`.
    #[inline]
    fn half_coefficients(&self, n: usize, j: T) -> (T, T) {
        let half_dt = self.dt / T::lit(2.0);
        let t_mid = (T::from_usize_exact(n) + T::lit(0.5)) * self.dt;
        let hbar = self.grid.hbar();
        (self.h.drive(t_mid) * half_dt / hbar, j * half_dt / hbar)
    }

    /// Advances `psi` by `count` steps starting at absolute step `first`.
    /// Series entries are indexed relative to `first`.
    pub fn advance(
        &self,
        psi: &mut [Complex<T>],
        scratch: &mut [Complex<T>],
        first: usize,
        count: usize,
        series: Option<SourceSeries<'_, T>>,
    ) {
        if count == 0 {
            return;
        }
        let hbar = self.grid.hbar();
        let src = |s: usize| series.map_or((T::zero(), T::zero()), |ser| ser.at(s));
        let (j0, _) = src(0);
        let (mut ax, mut bc) = self.half_coefficients(first, j0);
        self.apply_diagonal(psi, &self.half_static, ax, bc);
        for s in 0..count {
            self.kinetic_step(psi, scratch);
            let (_, w) = src(s);
            let w_coef = w / hbar;
            if s + 1 < count {
                let (j1, _) = src(s + 1);
                let (ax1, bc1) = self.half_coefficients(first + s + 1, j1);
                self.apply_diagonal(psi, &self.full_static, ax + ax1, bc + bc1 + w_coef);
                ax = ax1;
                bc = bc1;
            } else {
                self.apply_diagonal(psi, &self.half_static, ax, bc + w_coef);
            }
        }
    }
}

pub(crate) fn check_leakage<T: Real>(probability: T, time: T, tol: T) -> Result<()> {
    if probability > tol || !probability.is_finite() {
        return Err(EchoError::Leakage {
            time: time.as_f64(),
            probability: probability.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(())
}

/// Propagates `psi` and calls `observer(step, t, state)` at every checkpoint,
/// starting with the initial state. Returns the final state.
pub fn evolve_unitary_with<T, F>(
    psi: &WaveFunction<T>,
    h: &HamiltonianSpec<T>,
    params: &EvolutionParams<T>,
    perturbation: Option<Perturbation<'_, T>>,
    mut observer: F,
) -> Result<WaveFunction<T>>
where
    T: Real,
    F: FnMut(usize, T, &WaveFunction<T>) -> Result<()>,
{
    let n_steps = params.n_steps()?;
    if let Some(len) = perturbation.and_then(|p| p.series.len()) {
        if len != n_steps {
            return Err(EchoError::SourceLength { expected: n_steps, got: len });
        }
    }
    let stepper = SplitStepper::new(psi.grid(), h, params, perturbation.map(|p| p.coupling))?;
    let mut scratch = stepper.make_scratch();
    let mut state = psi.clone();
    let checkpoints = params.checkpoint_steps()?;
    let mut done = 0;
    for &step in &checkpoints {
        let series = perturbation.map(|p| match p.series {
            SourceSeries::Amplitude(v) => SourceSeries::Amplitude(&v[done..]),
            SourceSeries::Impulse(v) => SourceSeries::Impulse(&v[done..]),
            c @ SourceSeries::Constant(_) => c,
        });
        stepper.advance(state.amplitudes_mut(), &mut scratch, done, step - done, series);
        done = step;
        let t = params.time_of_step(step);
        check_leakage(state.boundary_probability(LEAKAGE_CELLS), t, params.leakage_tolerance)?;
        observer(step, t, &state)?;
    }
    Ok(state)
}

/// [`evolve_unitary_with`] collecting every checkpoint state.
pub fn evolve_unitary<T: Real>(
    psi: &WaveFunction<T>,
    h: &HamiltonianSpec<T>,
    params: &EvolutionParams<T>,
    perturbation: Option<Perturbation<'_, T>>,
) -> Result<Trajectory<WaveFunction<T>, T>> {
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new() };
    evolve_unitary_with(psi, h, params, perturbation, |_, t, s| {
        traj.times.push(t);
        traj.states.push(s.clone());
        Ok(())
    })?;
    Ok(traj)
}
