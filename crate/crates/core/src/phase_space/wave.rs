use num_complex::Complex;

use super::fft::FftPair;
use super::grid::PhaseSpaceGrid;
use crate::error::{EchoError, Result};
use crate::scalar::Real;

/// Pure state sampled on the position lattice, normalized so that
/// `sum |psi_j|^2 dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T> {
    grid: PhaseSpaceGrid<T>,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> WaveFunction<T> {
    /// Wraps raw amplitudes without renormalizing.
    pub fn from_amplitudes(grid: PhaseSpaceGrid<T>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(EchoError::InvalidInput(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(EchoError::InvalidInput("non-finite amplitude".into()));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Wraps amplitudes and rescales them to unit norm.
    pub fn normalized(grid: PhaseSpaceGrid<T>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let mut psi = Self::from_amplitudes(grid, amplitudes)?;
        if psi.norm_sq() <= T::zero() {
            return Err(EchoError::DegenerateState("zero wave function".into()));
        }
        psi.normalize();
        Ok(psi)
    }

    #[inline]
    pub fn grid(&self) -> &PhaseSpaceGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sq(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let scale = T::one() / self.norm_sq().sqrt();
        for a in &mut self.amplitudes {
            *a = *a * scale;
        }
    }

    /// `<self|other>` including the `dx` measure.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.grid.ensure_same(&other.grid)?;
        Ok(inner_product(&self.amplitudes, &other.amplitudes) * self.grid.dx())
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn mean_x(&self) -> T {
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * self.grid.position(j))
            .sum::<T>()
            * dx
    }

    pub fn variance_x(&self) -> T {
        let m = self.mean_x();
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let d = self.grid.position(j) - m;
                a.norm_sqr() * d * d
            })
            .sum::<T>()
            * dx
    }

    /// Momentum-space amplitudes `phi(p_k)` in signed FFT order, normalized so
    /// that `sum |phi_k|^2 dp = 1`.
    pub fn to_momentum(&self, fft: &FftPair<T>) -> Vec<Complex<T>> {
        let g = &self.grid;
        let mut buf = self.amplitudes.clone();
        let mut scratch = fft.make_scratch();
        fft.forward(&mut buf, &mut scratch);
        let scale = g.dx() / (T::TAU() * g.hbar()).sqrt();
        for (k, b) in buf.iter_mut().enumerate() {
            // phase from the lattice origin x_min
            let shift = crate::scalar::phase_factor(g.momentum(k) * g.x_min() / g.hbar());
            *b = *b * shift * scale;
        }
        buf
    }

    /// Inverse of [`WaveFunction::to_momentum`].
    pub fn from_momentum(
        grid: PhaseSpaceGrid<T>,
        phi: &[Complex<T>],
        fft: &FftPair<T>,
    ) -> Result<Self> {
        if phi.len() != grid.n_points() {
            return Err(EchoError::InvalidInput("momentum amplitudes length mismatch".into()));
        }
        let scale = grid.dx() / (T::TAU() * grid.hbar()).sqrt();
        let n = T::from_usize_exact(grid.n_points());
        let mut buf: Vec<Complex<T>> = phi
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let shift = crate::scalar::phase_factor(-grid.momentum(k) * grid.x_min() / grid.hbar());
                *b * shift / (scale * n)
            })
            .collect();
        let mut scratch = fft.make_scratch();
        fft.inverse(&mut buf, &mut scratch);
        Self::from_amplitudes(grid, buf)
    }

    /// Momentum probability density `|phi(p_k)|^2` in signed FFT order.
    pub fn momentum_density(&self, fft: &FftPair<T>) -> Vec<T> {
        self.to_momentum(fft).iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_p(&self, fft: &FftPair<T>) -> T {
        let dp = self.grid.dp();
        self.momentum_density(fft)
            .iter()
            .enumerate()
            .map(|(k, w)| *w * self.grid.momentum(k))
            .sum::<T>()
            * dp
    }

    pub fn variance_p(&self, fft: &FftPair<T>) -> T {
        let dens = self.momentum_density(fft);
        let dp = self.grid.dp();
        let mean = dens.iter().enumerate().map(|(k, w)| *w * self.grid.momentum(k)).sum::<T>() * dp;
        dens.iter()
            .enumerate()
            .map(|(k, w)| {
                let d = self.grid.momentum(k) - mean;
                *w * d * d
            })
            .sum::<T>()
            * dp
    }

    /// Probability within `cells` lattice spacings of either grid edge.
    pub fn boundary_probability(&self, cells: usize) -> T {
        boundary_weight(self.amplitudes.iter().map(|a| a.norm_sqr()), self.grid.n_points(), cells)
            * self.grid.dx()
    }
}

/// `sum conj(a_j) b_j`, without the lattice measure.
#[inline]
pub(crate) fn inner_product<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let mut re = T::zero();
    let mut im = T::zero();
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex::new(re, im)
}

pub(crate) fn boundary_weight<T: Real>(
    weights: impl Iterator<Item = T>,
    n: usize,
    cells: usize,
) -> T {
    weights
        .enumerate()
        .filter(|(j, _)| *j < cells || *j >= n.saturating_sub(cells))
        .map(|(_, w)| w)
        .sum()
}

/// Minimum-uncertainty momentum dispersion of a Gaussian of position spread
/// `sigma_x`.
pub fn momentum_dispersion<T: Real>(hbar: T, sigma_x: T) -> T {
    hbar / (T::lit(2.0) * sigma_x)
}

/// Normalized Gaussian wave packet centred at `(x0, p0)` with position spread
/// `sigma_x`; its momentum spread is `hbar / (2 sigma_x)`.
pub fn make_gaussian_state<T: Real>(
    grid: &PhaseSpaceGrid<T>,
    x0: T,
    p0: T,
    sigma_x: T,
) -> Result<WaveFunction<T>> {
    let three = T::lit(3.0);
    if !(sigma_x > three * grid.dx()) {
        return Err(EchoError::GridTooCoarse(format!(
            "sigma_x = {sigma_x} must exceed 3 dx = {}",
            three * grid.dx()
        )));
    }
    if !(sigma_x < grid.length() / T::lit(6.0)) {
        return Err(EchoError::GridTooCoarse(format!(
            "sigma_x = {sigma_x} must be below (x_max - x_min)/6 = {}",
            grid.length() / T::lit(6.0)
        )));
    }
    let amps = gaussian_amplitudes(grid, x0, p0, sigma_x);
    WaveFunction::normalized(*grid, amps)
}

pub(crate) fn gaussian_amplitudes<T: Real>(
    grid: &PhaseSpaceGrid<T>,
    x0: T,
    p0: T,
    sigma_x: T,
) -> Vec<Complex<T>> {
    let four = T::lit(4.0);
    (0..grid.n_points())
        .map(|j| {
            let x = grid.position(j);
            let d = x - x0;
            let env = (-(d * d) / (four * sigma_x * sigma_x)).exp();
            // phase referenced to x0 so the packet is independent of the origin
            let (s, c) = (p0 * d / grid.hbar()).sin_cos();
            Complex::new(env * c, env * s)
        })
        .collect()
}

/// Even superposition of two Gaussian packets at `x0 +- separation/2`.
pub fn make_cat_state<T: Real>(
    grid: &PhaseSpaceGrid<T>,
    center: T,
    separation: T,
    sigma_x: T,
) -> Result<WaveFunction<T>> {
    let half = separation / T::lit(2.0);
    make_gaussian_state(grid, center, T::zero(), sigma_x)?;
    let a = gaussian_amplitudes(grid, center - half, T::zero(), sigma_x);
    let b = gaussian_amplitudes(grid, center + half, T::zero(), sigma_x);
    WaveFunction::normalized(*grid, a.iter().zip(&b).map(|(x, y)| *x + *y).collect())
}
