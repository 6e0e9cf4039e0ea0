//! White-noise master equation
//! `d rho/dt = (1/i hbar)[H0, rho] - D [V, [V, rho]]`
//! in the position representation. Each step applies the split-operator
//! unitary to both indices of `rho` and the exact dephasing factor
//! `exp(-D (V_i - V_j)^2 dt)`, both ends of the step merged with the
//! neighbouring kicks.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{EchoError, Result};
use crate::phase_space::fft::transpose_in_place;
use crate::phase_space::{DensityMatrix, FftPair, PhaseSpaceGrid};
use crate::scalar::{phase_factor, Real};

use super::hamiltonian::{CouplingFunction, HamiltonianSpec};
use super::params::{EvolutionParams, LEAKAGE_CELLS};
use super::split::{apply_linear_phase, check_leakage, Trajectory};

#[derive(Debug, Clone)]
pub struct MasterStepper<T: Real> {
    grid: PhaseSpaceGrid<T>,
    h: HamiltonianSpec<T>,
    dt: T,
    fft: FftPair<T>,
    /// `exp(-i p^2 dt / 2 m hbar) / n`; `None` when frozen.
    kinetic: Option<Vec<Complex<T>>>,
    half_static: Vec<Complex<T>>,
    full_static: Vec<Complex<T>>,
    /// Row-major `exp(-D (V_i - V_j)^2 dt)`; `None` when `D = 0`.
    dephasing: Option<Vec<T>>,
}

impl<T: Real> MasterStepper<T> {
    pub fn new(
        grid: &PhaseSpaceGrid<T>,
        h: &HamiltonianSpec<T>,
        coupling: &CouplingFunction<T>,
        diffusion_d: T,
        params: &EvolutionParams<T>,
    ) -> Result<Self> {
        if !(diffusion_d >= T::zero()) || !diffusion_d.is_finite() {
            return Err(EchoError::InvalidInput(format!("diffusion_d must be >= 0, got {diffusion_d}")));
        }
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
        let c = coupling.values(grid)?;
        let dephasing = (diffusion_d > T::zero()).then(|| {
            let mut g = Vec::with_capacity(n * n);
            for ci in &c {
                for cj in &c {
                    let d = *ci - *cj;
                    g.push((-diffusion_d * d * d * dt).exp());
                }
            }
            g
        });
        Ok(Self {
            grid: *grid,
            h: *h,
            dt,
            fft: FftPair::new(n),
            kinetic,
            half_static: vs.iter().map(|v| phase_factor(*v * dt / (two * hbar))).collect(),
            full_static: vs.iter().map(|v| phase_factor(*v * dt / hbar)).collect(),
            dephasing,
        })
    }

    /// Drive half-kick coefficient on `x` for absolute step `n`.
    fn half_drive(&self, n: usize) -> T {
        let t_mid = (T::from_usize_exact(n) + T::lit(0.5)) * self.dt;
        self.h.drive(t_mid) * self.dt / (T::lit(2.0) * self.grid.hbar())
    }

    fn kick_vector(&self, stat: &[Complex<T>], ax: T) -> Vec<Complex<T>> {
        let mut k = stat.to_vec();
        apply_linear_phase(&mut k, ax, self.grid.x_min(), self.grid.dx());
        k
    }

    /// `rho_ij <- k_i conj(k_j) [g_ij]`.
    fn apply_diagonal(&self, rho: &mut Array2<Complex<T>>, k: &[Complex<T>], dephase: bool) {
        let n = self.grid.n_points();
        let kc: Vec<Complex<T>> = k.iter().map(|z| z.conj()).collect();
        let data = rho.as_slice_mut().expect("contiguous matrix");
        for (i, row) in data.chunks_exact_mut(n).enumerate() {
            let ki = k[i];
            match (&self.dephasing, dephase) {
                (Some(g), true) => {
                    let gi = &g[i * n..(i + 1) * n];
                    for ((v, kj), gij) in row.iter_mut().zip(&kc).zip(gi) {
                        *v = *v * (ki * *kj) * *gij;
                    }
                }
                _ => {
                    for (v, kj) in row.iter_mut().zip(&kc) {
                        *v = *v * (ki * *kj);
                    }
                }
            }
        }
    }

    /// `rho <- U rho U^dagger` for the kinetic propagator `U`.
    fn kinetic_step(&self, rho: &mut Array2<Complex<T>>, scratch: &mut [Complex<T>]) {
        let Some(k) = &self.kinetic else { return };
        let n = self.grid.n_points();
        // rows of rho U^dagger are conj(U) applied to rows of rho
        self.fft.inverse_rows(rho, scratch);
        for row in rho.as_slice_mut().unwrap().chunks_exact_mut(n) {
            for (v, f) in row.iter_mut().zip(k) {
                *v = *v * f.conj();
            }
        }
        self.fft.forward_rows(rho, scratch);
        // (U X)^T has rows U applied to rows of X^T
        transpose_in_place(rho);
        self.fft.forward_rows(rho, scratch);
        for row in rho.as_slice_mut().unwrap().chunks_exact_mut(n) {
            for (v, f) in row.iter_mut().zip(k) {
                *v = *v * *f;
            }
        }
        self.fft.inverse_rows(rho, scratch);
        transpose_in_place(rho);
    }

    pub fn make_scratch(&self) -> Vec<Complex<T>> {
        self.fft.make_scratch()
    }

    /// Advances `rho` by `count` steps from absolute step `first`.
    pub fn advance(&self, rho: &mut Array2<Complex<T>>, scratch: &mut [Complex<T>], first: usize, count: usize) {
        if count == 0 {
            return;
        }
        let mut ax = self.half_drive(first);
        let k = self.kick_vector(&self.half_static, ax);
        self.apply_diagonal(rho, &k, false);
        for s in 0..count {
            self.kinetic_step(rho, scratch);
            if s + 1 < count {
                let ax1 = self.half_drive(first + s + 1);
                let k = self.kick_vector(&self.full_static, ax + ax1);
                self.apply_diagonal(rho, &k, true);
                ax = ax1;
            } else {
                let k = self.kick_vector(&self.half_static, ax);
                self.apply_diagonal(rho, &k, true);
            }
        }
    }
}

/// Integrates the master equation, calling `observer(step, t, rho)` at every
/// checkpoint including the initial one. Returns the final state.
pub fn evolve_master_with<T, F>(
    rho: &DensityMatrix<T>,
    h: &HamiltonianSpec<T>,
    coupling: &CouplingFunction<T>,
    diffusion_d: T,
    params: &EvolutionParams<T>,
    mut observer: F,
) -> Result<DensityMatrix<T>>
where
    T: Real,
    F: FnMut(usize, T, &DensityMatrix<T>) -> Result<()>,
{
    let stepper = MasterStepper::new(rho.grid(), h, coupling, diffusion_d, params)?;
    let mut scratch = stepper.make_scratch();
    let grid = *rho.grid();
    let mut elements = rho.elements().as_standard_layout().into_owned();
    let mut done = 0;
    for step in params.checkpoint_steps()? {
        stepper.advance(&mut elements, &mut scratch, done, step - done);
        done = step;
        let t = params.time_of_step(step);
        let state = DensityMatrix::from_elements_unchecked(grid, elements)?;
        check_leakage(state.boundary_probability(LEAKAGE_CELLS), t, params.leakage_tolerance)?;
        observer(step, t, &state)?;
        elements = state.into_elements();
    }
    DensityMatrix::from_elements_unchecked(grid, elements)
}

/// [`evolve_master_with`] collecting every checkpoint state.
pub fn evolve_master<T: Real>(
    rho: &DensityMatrix<T>,
    h: &HamiltonianSpec<T>,
    coupling: &CouplingFunction<T>,
    diffusion_d: T,
    params: &EvolutionParams<T>,
) -> Result<Trajectory<DensityMatrix<T>, T>> {
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new() };
    evolve_master_with(rho, h, coupling, diffusion_d, params, |_, t, r| {
        traj.times.push(t);
        traj.states.push(r.clone());
        Ok(())
    })?;
    Ok(traj)
}
