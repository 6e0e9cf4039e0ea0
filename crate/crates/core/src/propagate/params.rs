use crate::error::{EchoError, Result};
use crate::phase_space::PhaseSpaceGrid;
use crate::scalar::Real;

use super::hamiltonian::HamiltonianSpec;

/// Boundary leakage allowed before a run is aborted.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-4;

/// Width, in cells, of the boundary strip watched by the leakage monitor.
pub const LEAKAGE_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams<T> {
    pub dt: T,
    pub t_max: T,
    /// Steps between stored checkpoints.
    pub store_every: usize,
    /// Largest probability allowed within [`LEAKAGE_CELLS`] of either edge.
    pub leakage_tolerance: T,
}

impl<T: Real> EvolutionParams<T> {
    pub fn new(dt: T, t_max: T, store_every: usize) -> Result<Self> {
        let p = Self { dt, t_max, store_every, leakage_tolerance: T::lit(DEFAULT_LEAKAGE_TOLERANCE) };
        p.n_steps()?;
        Ok(p)
    }

    pub fn with_leakage_tolerance(mut self, tol: T) -> Self {
        self.leakage_tolerance = tol;
        self
    }

    /// `t_max / dt`, which must be an integer.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(EchoError::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > T::zero()) || !self.t_max.is_finite() {
            return Err(EchoError::InvalidInput(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.store_every == 0 {
            return Err(EchoError::InvalidInput("store_every must be at least 1".into()));
        }
        if !(self.leakage_tolerance > T::zero()) {
            return Err(EchoError::InvalidInput("leakage_tolerance must be positive".into()));
        }
        let ratio = self.t_max / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > T::lit(1e-6) * n.max(T::one()) || n < T::one() {
            return Err(EchoError::InvalidInput(format!(
                "t_max / dt = {ratio} is not a positive integer"
            )));
        }
        n.to_usize().ok_or_else(|| EchoError::InvalidInput("step count overflow".into()))
    }

    /// Step indices at which observables are stored: every `store_every`
    /// steps from 0, plus the final step.
    pub fn checkpoint_steps(&self) -> Result<Vec<usize>> {
        let n = self.n_steps()?;
        let mut steps: Vec<usize> = (0..=n).step_by(self.store_every).collect();
        if *steps.last().unwrap() != n {
            steps.push(n);
        }
        Ok(steps)
    }

    pub fn time_of_step(&self, step: usize) -> T {
        T::from_usize_exact(step) * self.dt
    }

    /// Stability heuristic `dt <= 0.1 hbar / max|V0|` and
    /// `dt <= 0.1 * 2 m hbar / p_max^2`.
    pub fn check_stability(&self, grid: &PhaseSpaceGrid<T>, h: &HamiltonianSpec<T>) -> Result<()> {
        self.n_steps()?;
        let tenth = T::lit(0.1);
        let vmax = h.max_abs_potential(grid);
        if vmax > T::zero() {
            let bound = tenth * grid.hbar() / vmax;
            if self.dt > bound {
                return Err(EchoError::UnstableTimeStep {
                    dt: self.dt.as_f64(),
                    bound: bound.as_f64(),
                    reason: "potential phase per step",
                });
            }
        }
        if !h.frozen() {
            let pm = grid.p_max();
            let bound = tenth * T::lit(2.0) * h.mass * grid.hbar() / (pm * pm);
            if self.dt > bound {
                return Err(EchoError::UnstableTimeStep {
                    dt: self.dt.as_f64(),
                    bound: bound.as_f64(),
                    reason: "kinetic phase at the largest grid momentum",
                });
            }
        }
        Ok(())
    }
}
