use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EchoError, Result};
use crate::propagate::CouplingFunction;
use crate::scalar::Real;

/// Correlation kernel of the Gaussian noise `J(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKernel<T> {
    /// `<J(t) J(t')> = 2 D hbar^2 delta(t - t')`.
    White { diffusion_d: T },
    /// `<J(t) J(t')> = nu0`: one constant amplitude per realization.
    Flat { variance_nu0: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProcess<T> {
    pub kernel: NoiseKernel<T>,
    pub coupling: CouplingFunction<T>,
    pub seed: u64,
    pub n_realizations: usize,
}

/// One sampled realization.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSeries<T> {
    /// Per-step increments `W_k` of the white kernel.
    Impulses(Vec<T>),
    /// The constant amplitude `J_0` of the flat kernel, repeated per step.
    Amplitudes(Vec<T>),
}

impl<T> NoiseSeries<T> {
    pub fn values(&self) -> &[T] {
        match self {
            NoiseSeries::Impulses(v) | NoiseSeries::Amplitudes(v) => v,
        }
    }
}

/// Independent generator of realization `index`: the ChaCha stream `index`
/// under key `seed`, so any realization can be drawn without the others.
pub fn realization_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl<T: Real> NoiseProcess<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.kernel {
            NoiseKernel::White { diffusion_d } => diffusion_d >= T::zero() && diffusion_d.is_finite(),
            NoiseKernel::Flat { variance_nu0 } => variance_nu0 >= T::zero() && variance_nu0.is_finite(),
        };
        if !ok {
            return Err(EchoError::InvalidInput(format!("invalid noise kernel {:?}", self.kernel)));
        }
        if self.n_realizations == 0 {
            return Err(EchoError::InvalidInput("n_realizations must be positive".into()));
        }
        Ok(())
    }

    /// Standard deviation of one draw: `sqrt(2 D hbar^2 dt)` per white step,
    /// `sqrt(nu0)` for the flat amplitude.
    pub fn draw_scale(&self, dt: T, hbar: T) -> T {
        match self.kernel {
            NoiseKernel::White { diffusion_d } => (T::lit(2.0) * diffusion_d * dt).sqrt() * hbar,
            NoiseKernel::Flat { variance_nu0 } => variance_nu0.sqrt(),
        }
    }

    pub fn is_white(&self) -> bool {
        matches!(self.kernel, NoiseKernel::White { .. })
    }

    /// White-kernel diffusion coefficient, 0 for the flat kernel.
    pub fn diffusion_d(&self) -> T {
        match self.kernel {
            NoiseKernel::White { diffusion_d } => diffusion_d,
            NoiseKernel::Flat { .. } => T::zero(),
        }
    }
}

#[inline]
pub(crate) fn gaussian<T: Real>(rng: &mut ChaCha8Rng, scale: T) -> T {
    let z: f64 = StandardNormal.sample(rng);
    scale * T::lit(z)
}

/// Noise of realization `index` over `n_steps` steps of length `dt`. A pure
/// function of `(seed, index)`; the ensemble runner draws the same numbers.
pub fn sample_realization<T: Real>(
    process: &NoiseProcess<T>,
    index: usize,
    n_steps: usize,
    dt: T,
    hbar: T,
) -> Result<NoiseSeries<T>> {
    process.validate()?;
    if index >= process.n_realizations {
        return Err(EchoError::InvalidInput(format!(
            "realization {index} out of range ({} realizations)",
            process.n_realizations
        )));
    }
    let mut rng = realization_rng(process.seed, index);
    let scale = process.draw_scale(dt, hbar);
    Ok(match process.kernel {
        NoiseKernel::White { .. } => NoiseSeries::Impulses((0..n_steps).map(|_| gaussian(&mut rng, scale)).collect()),
        NoiseKernel::Flat { .. } => NoiseSeries::Amplitudes(vec![gaussian(&mut rng, scale); n_steps]),
    })
}
