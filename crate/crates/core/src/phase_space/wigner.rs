//! Wigner transform of position-space density matrices.
//!
//! `W(x, p) = (1 / 2 pi hbar) \int ds rho(x + s/2, x - s/2) e^{-i p s / hbar}`
//! is evaluated on the same `n x n` lattice as the state: for every `x_i` the
//! chord function `s -> rho(x_i + s/2, x_i - s/2)` is sampled at `s = m dx`,
//! `m in [-n/2, n/2)`, and Fourier transformed along `m`. Even chords land on
//! lattice points; odd chords need `rho` at half-cell offsets, which are taken
//! from a band-limited (Fourier) interpolation of `rho`. Chords longer than
//! half the box are dropped, so states must stay well inside the grid.

use ndarray::Array2;
use num_complex::Complex;

use super::density::DensityMatrix;
use super::fft::{transpose_in_place, FftPair};
use super::grid::PhaseSpaceGrid;
use super::wave::WaveFunction;
use crate::error::{EchoError, Result};
use crate::scalar::Real;

/// Real phase-space quasi-distribution. `values[[i, j]] = W(x_i, p_j)` with
/// momenta in ascending order, `p_j = (j - n/2) dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerFunction<T> {
    grid: PhaseSpaceGrid<T>,
    values: Array2<T>,
    imaginary_residue: T,
}

impl<T: Real> WignerFunction<T> {
    pub fn from_values(grid: PhaseSpaceGrid<T>, values: Array2<T>) -> Result<Self> {
        let n = grid.n_points();
        if values.dim() != (n, n) {
            return Err(EchoError::InvalidInput(format!(
                "Wigner array shape {:?} does not match {n} points",
                values.dim()
            )));
        }
        let values = values.as_standard_layout().into_owned();
        Ok(Self { grid, values, imaginary_residue: T::zero() })
    }

    #[inline]
    pub fn grid(&self) -> &PhaseSpaceGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    /// Largest imaginary part left by the transform, relative to the largest
    /// real value.
    pub fn imaginary_residue(&self) -> T {
        self.imaginary_residue
    }

    /// `sum W dx dp`.
    pub fn normalization(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.dx() * self.grid.dp()
    }

    /// `sum_j W(x_i, p_j) dp` for every `x_i`.
    pub fn position_marginal(&self) -> Vec<T> {
        let dp = self.grid.dp();
        self.values.outer_iter().map(|row| row.iter().copied().sum::<T>() * dp).collect()
    }

    /// `sum_i W(x_i, p_j) dx` for every ascending `p_j`.
    pub fn momentum_marginal(&self) -> Vec<T> {
        let n = self.grid.n_points();
        let dx = self.grid.dx();
        (0..n).map(|j| self.values.column(j).iter().copied().sum::<T>() * dx).collect()
    }

    /// `2 pi hbar sum W_a W_b dx dp`, which equals `Tr(rho_a rho_b)`.
    pub fn overlap(&self, other: &Self) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        let g = &self.grid;
        let s: T = self.values.iter().zip(other.values.iter()).map(|(a, b)| *a * *b).sum();
        Ok(s * T::TAU() * g.hbar() * g.dx() * g.dp())
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Lattice point `(i, j)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = T::neg_infinity();
        for ((i, j), w) in self.values.indexed_iter() {
            if *w > v {
                v = *w;
                best = (i, j);
            }
        }
        best
    }

    /// Value at the lattice point nearest to `(x, p)`.
    pub fn value_near(&self, x: T, p: T) -> T {
        self.values[[self.grid.nearest_position_index(x), self.grid.nearest_momentum_column(p)]]
    }

    /// Mirror image `W(-x, -p)`, exact when the grid is symmetric about zero.
    pub fn reflected(&self) -> Self {
        let n = self.grid.n_points();
        // x_i = x_min + i dx  ->  -x_i = x_{n - i} for a symmetric grid
        let values = Array2::from_shape_fn((n, n), |(i, j)| {
            self.values[[(n - i) % n, (n - j) % n]]
        });
        Self { grid: self.grid, values, imaginary_residue: self.imaginary_residue }
    }
}

/// Density matrix sampled half a cell away from the lattice:
/// `out[[i, j]] = rho(x_i + dx/2, x_j - dx/2)`.
fn half_cell_shift<T: Real>(rho: &Array2<Complex<T>>, fft: &FftPair<T>) -> Array2<Complex<T>> {
    let n = rho.nrows();
    let mut m = rho.clone();
    let mut scratch = fft.make_scratch();
    let inv_n = T::one() / T::from_usize_exact(n);
    let shift = |m: &mut Array2<Complex<T>>, sign: T, scratch: &mut [Complex<T>]| {
        fft.forward_rows(m, scratch);
        let phases: Vec<Complex<T>> = (0..n)
            .map(|k| {
                if k == n / 2 {
                    // Nyquist bin: keep the symmetric (real) part only
                    Complex::new(T::zero(), T::zero())
                } else {
                    let ks = if k < n / 2 { k as isize } else { k as isize - n as isize };
                    let theta = sign * T::PI() * T::from_isize(ks).unwrap() * inv_n;
                    let (s, c) = theta.sin_cos();
                    Complex::new(c * inv_n, s * inv_n)
                }
            })
            .collect();
        for row in m.as_slice_mut().unwrap().chunks_exact_mut(n) {
            for (v, ph) in row.iter_mut().zip(&phases) {
                *v = *v * *ph;
            }
        }
        fft.inverse_rows(m, scratch);
    };
    // second argument: x' -> x' - dx/2
    shift(&mut m, -T::one(), &mut scratch);
    transpose_in_place(&mut m);
    // first argument: x -> x + dx/2
    shift(&mut m, T::one(), &mut scratch);
    transpose_in_place(&mut m);
    m
}

/// Wigner function of a density matrix.
pub fn wigner_transform<T: Real>(rho: &DensityMatrix<T>) -> WignerFunction<T> {
    let grid = *rho.grid();
    let fft = FftPair::new(grid.n_points());
    wigner_transform_with(rho, &fft)
}

/// Wigner function of a pure state.
pub fn wigner_of_pure<T: Real>(psi: &WaveFunction<T>) -> WignerFunction<T> {
    wigner_transform(&DensityMatrix::from_pure(psi))
}

/// [`wigner_transform`] with caller-provided FFT plans of length `n_points`.
pub fn wigner_transform_with<T: Real>(rho: &DensityMatrix<T>, fft: &FftPair<T>) -> WignerFunction<T> {
    let grid = *rho.grid();
    let n = grid.n_points();
    let e = rho.elements();
    let shifted = half_cell_shift(e, fft);
    let mut chord = Array2::<Complex<T>>::zeros((n, n));
    let ni = n as isize;
    for i in 0..n {
        let ii = i as isize;
        let mut row = chord.row_mut(i);
        for m in 0..n {
            let ms = if m < n / 2 { m as isize } else { m as isize - ni };
            let l = ms.div_euclid(2);
            let a = (ii + l).rem_euclid(ni) as usize;
            let b = (ii - l).rem_euclid(ni) as usize;
            let v = if ms.rem_euclid(2) == 0 { e[[a, b]] } else { shifted[[a, b]] };
            row[m] = if ms.rem_euclid(2) == 0 { v } else { -v };
        }
    }
    let mut scratch = fft.make_scratch();
    fft.forward_rows(&mut chord, &mut scratch);
    let scale = grid.dx() / (T::TAU() * grid.hbar());
    let mut max_re = T::zero();
    let mut max_im = T::zero();
    let values = chord.mapv(|c| {
        max_re = max_re.max(c.re.abs());
        max_im = max_im.max(c.im.abs());
        c.re * scale
    });
    let imaginary_residue = if max_re > T::zero() { max_im / max_re } else { max_im };
    WignerFunction { grid, values, imaginary_residue }
}
