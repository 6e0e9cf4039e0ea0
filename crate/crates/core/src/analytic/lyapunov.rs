//! Largest classical Lyapunov exponent by the Benettin renormalization
//! method, on a leapfrog trajectory with its tangent map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EchoError, Result};
use crate::propagate::HamiltonianSpec;
use crate::scalar::Real;

/// Phase-space point at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState<T> {
    pub x: T,
    pub p: T,
    pub t: T,
}

/// One kick-drift-kick step. A frozen kinetic term skips the drift.
pub fn leapfrog_step<T: Real>(h: &HamiltonianSpec<T>, s: &mut ClassicalState<T>, dt: T) {
    let half = T::lit(0.5) * dt;
    s.p += half * h.force(s.x, s.t);
    if !h.frozen() {
        s.x += dt * s.p / h.mass;
    }
    s.t += dt;
    s.p += half * h.force(s.x, s.t);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenettinOptions<T> {
    pub dt: T,
    /// Abort once `|x|` exceeds this.
    pub escape_bound: T,
    /// Fraction of `t_total` discarded as transient.
    pub transient_fraction: T,
    /// Blocks for the standard error.
    pub n_blocks: usize,
}

impl<T: Real> Default for BenettinOptions<T> {
    fn default() -> Self {
        Self { dt: T::lit(1e-3), escape_bound: T::lit(1e6), transient_fraction: T::lit(0.1), n_blocks: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate<T> {
    pub lambda: T,
    pub stderr: T,
    pub t_transient: T,
    pub n_renormalizations: usize,
}

pub fn lyapunov_benettin<T: Real>(
    h: &HamiltonianSpec<T>,
    x0: T,
    p0: T,
    t_total: T,
    renorm_every: T,
) -> Result<LyapunovEstimate<T>> {
    lyapunov_benettin_with(h, x0, p0, t_total, renorm_every, &BenettinOptions::default())
}

pub fn lyapunov_benettin_with<T: Real>(
    h: &HamiltonianSpec<T>,
    x0: T,
    p0: T,
    t_total: T,
    renorm_every: T,
    options: &BenettinOptions<T>,
) -> Result<LyapunovEstimate<T>> {
    h.validate()?;
    let dt = options.dt;
    if !(dt > T::zero()) || !(renorm_every >= dt) || !(t_total > renorm_every) {
        return Err(EchoError::InvalidInput(format!(
            "need 0 < dt <= renorm_every < t_total, got dt = {dt}, renorm_every = {renorm_every}, t_total = {t_total}"
        )));
    }
    let steps_per = (renorm_every / dt).round().to_usize().unwrap_or(1).max(1);
    let tau = T::from_usize_exact(steps_per) * dt;
    let n_intervals = (t_total / tau).floor().to_usize().unwrap_or(0);
    let n_skip = (T::from_usize_exact(n_intervals) * options.transient_fraction).ceil().to_usize().unwrap_or(0);
    let nb = options.n_blocks.max(2);
    if n_intervals < n_skip + nb {
        return Err(EchoError::InvalidInput(format!(
            "{n_intervals} renormalizations leave fewer than {nb} after the transient"
        )));
    }
    let inv_m = if h.frozen() { T::zero() } else { T::one() / h.mass };
    let half = T::lit(0.5) * dt;
    let mut s = ClassicalState { x: x0, p: p0, t: T::zero() };
    // unit tangent vector
    let (mut dx, mut dp) = (T::one(), T::zero());
    let mut logs = Vec::with_capacity(n_intervals);
    for _ in 0..n_intervals {
        for _ in 0..steps_per {
            dp -= half * h.curvature(s.x) * dx;
            leapfrog_step(h, &mut s, dt);
            dx += dt * dp * inv_m;
            dp -= half * h.curvature(s.x) * dx;
        }
        if !(s.x.abs() <= options.escape_bound) {
            return Err(EchoError::TrajectoryEscape { bound: options.escape_bound.as_f64(), time: s.t.as_f64() });
        }
        let g = (dx * dx + dp * dp).sqrt();
        if !(g > T::zero()) || !g.is_finite() {
            return Err(EchoError::DegenerateState(format!("tangent norm {g} at t = {}", s.t)));
        }
        logs.push(g.ln());
        dx /= g;
        dp /= g;
    }
    let kept = &logs[n_skip..];
    let n_kept = T::from_usize_exact(kept.len());
    let lambda = kept.iter().copied().sum::<T>() / (n_kept * tau);
    // equal blocks, any remainder folded into the last one
    let per = kept.len() / nb;
    let rates: Vec<T> = (0..nb)
        .map(|b| {
            let end = if b + 1 == nb { kept.len() } else { (b + 1) * per };
            let chunk = &kept[b * per..end];
            chunk.iter().copied().sum::<T>() / (T::from_usize_exact(chunk.len()) * tau)
        })
        .collect();
    let nbt = T::from_usize_exact(nb);
    let mean = rates.iter().copied().sum::<T>() / nbt;
    let var = rates.iter().map(|r| (*r - mean) * (*r - mean)).sum::<T>() / (nbt - T::one());
    Ok(LyapunovEstimate {
        lambda,
        stderr: (var / nbt).sqrt(),
        t_transient: T::from_usize_exact(n_skip) * tau,
        n_renormalizations: n_intervals,
    })
}

/// Reference exponent `lambda*` averaged over trajectories of the chaotic
/// sea.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticSeaEstimate<T> {
    pub lambda_star: T,
    /// Standard error over the accepted trajectories.
    pub stderr: T,
    pub accepted: Vec<(T, T, LyapunovEstimate<T>)>,
    pub rejected: usize,
}

/// Draws initial conditions uniformly from `x_range x p_range` and keeps the
/// first `n_wanted` whose estimate exceeds 2 standard errors (trajectories in
/// regular islands are rejected). Draws are evaluated in parallel batches and
/// accepted in draw order, so the result depends only on `seed`.
#[allow(clippy::too_many_arguments)]
pub fn chaotic_sea_lyapunov<T: Real>(
    h: &HamiltonianSpec<T>,
    x_range: (T, T),
    p_range: (T, T),
    n_wanted: usize,
    seed: u64,
    t_total: T,
    renorm_every: T,
    options: &BenettinOptions<T>,
) -> Result<ChaoticSeaEstimate<T>> {
    if n_wanted < 2 {
        return Err(EchoError::InvalidInput("need at least 2 trajectories".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_draws = 10 * n_wanted;
    let mut accepted = Vec::with_capacity(n_wanted);
    let mut rejected = 0;
    let mut drawn = 0;
    while accepted.len() < n_wanted && drawn < max_draws {
        let batch: Vec<(T, T)> = (0..n_wanted.min(max_draws - drawn))
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                (
                    x_range.0 + (x_range.1 - x_range.0) * T::lit(u),
                    p_range.0 + (p_range.1 - p_range.0) * T::lit(v),
                )
            })
            .collect();
        drawn += batch.len();
        let results: Vec<_> = batch
            .par_iter()
            .map(|&(x, p)| lyapunov_benettin_with(h, x, p, t_total, renorm_every, options))
            .collect();
        for ((x, p), est) in batch.into_iter().zip(results) {
            match est {
                Ok(e) if e.lambda > T::lit(2.0) * e.stderr && accepted.len() < n_wanted => accepted.push((x, p, e)),
                Ok(_) | Err(EchoError::TrajectoryEscape { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if accepted.len() < n_wanted {
        return Err(EchoError::NoDecay(format!(
            "only {} of {max_draws} initial conditions are chaotic",
            accepted.len()
        )));
    }
    let n = T::from_usize_exact(accepted.len());
    let mean = accepted.iter().map(|a| a.2.lambda).sum::<T>() / n;
    let var = accepted.iter().map(|a| (a.2.lambda - mean) * (a.2.lambda - mean)).sum::<T>() / (n - T::one());
    Ok(ChaoticSeaEstimate { lambda_star: mean, stderr: (var / n).sqrt(), accepted, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::Potential;

    #[test]
    fn inverted_oscillator_rate_is_lambda0() {
        for l in [1.0, 0.5] {
            let h = HamiltonianSpec::<f64>::unit_mass(Potential::InvertedOscillator { lambda0: l });
            let e = lyapunov_benettin(&h, 0.1, 0.0, 10.0 / l, 0.1).unwrap();
            assert!((e.lambda - l).abs() < 0.01 * l, "{e:?}");
            assert_eq!(e.n_renormalizations, (100.0 / l).round() as usize);
        }
    }

    #[test]
    fn harmonic_oscillator_is_regular() {
        let h = HamiltonianSpec::<f64>::unit_mass(Potential::Harmonic { omega: 1.7 });
        let e = lyapunov_benettin(&h, 1.0, 0.3, 200.0, 0.5).unwrap();
        assert!(e.lambda.abs() <= 3.0 * e.stderr, "{e:?}");
        assert!(e.lambda.abs() < 1e-2);
    }

    #[test]
    fn escape_is_reported() {
        let h = HamiltonianSpec::<f64>::unit_mass(Potential::InvertedOscillator { lambda0: 1.0 });
        let opts = BenettinOptions { escape_bound: 100.0, ..BenettinOptions::default() };
        let err = lyapunov_benettin_with(&h, 1.0, 0.0, 50.0, 0.1, &opts).unwrap_err();
        assert!(matches!(err, EchoError::TrajectoryEscape { .. }));
    }

    fn max_energy_error(h: &HamiltonianSpec<f64>, dt: f64, t: f64) -> f64 {
        let mut s = ClassicalState { x: 1.0, p: 0.5, t: 0.0 };
        let e0 = h.energy(s.x, s.p, 0.0);
        let mut worst: f64 = 0.0;
        for _ in 0..(t / dt).round() as usize {
            leapfrog_step(h, &mut s, dt);
            worst = worst.max((h.energy(s.x, s.p, s.t) - e0).abs() / e0.abs());
        }
        worst
    }

    #[test]
    fn leapfrog_conserves_energy_without_drive() {
        let h = HamiltonianSpec::<f64>::unit_mass(Potential::Harmonic { omega: 1.0 });
        assert!(max_energy_error(&h, 1e-3, 20.0) < 1e-6);
        // the undriven well has |V''| up to ~40 on this orbit: the bounded
        // error scales as (omega dt)^2 and reaches 1e-6 only below dt = 2e-4
        let well = HamiltonianSpec::<f64>::unit_mass(Potential::DoubleWell { a4: 0.5, a2: 10.0, drive_amp: 0.0, drive_freq: 0.0 });
        let coarse = max_energy_error(&well, 1e-3, 20.0);
        let fine = max_energy_error(&well, 1e-4, 20.0);
        assert!(fine < 1e-6, "{fine}");
        assert!((coarse / fine - 100.0).abs() < 10.0, "{coarse} {fine}");
    }

    #[test]
    fn rejects_short_runs() {
        let h = HamiltonianSpec::<f64>::unit_mass(Potential::Harmonic { omega: 1.0 });
        assert!(lyapunov_benettin(&h, 1.0, 0.0, 0.5, 0.1).is_err());
        assert!(lyapunov_benettin(&h, 1.0, 0.0, 10.0, 1e-4).is_err());
    }
}
