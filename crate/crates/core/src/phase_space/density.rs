use ndarray::Array2;
use num_complex::Complex;

use super::fft::{transpose_in_place, FftPair};
use super::grid::PhaseSpaceGrid;
use super::wave::{boundary_weight, WaveFunction};
use crate::error::{EchoError, Result};
use crate::scalar::Real;

/// Mixed state in position representation, `rho[[i, j]] = rho(x_i, x_j)`,
/// with `sum_i rho(x_i, x_i) dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    grid: PhaseSpaceGrid<T>,
    elements: Array2<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Wraps a matrix after checking shape, Hermiticity (1e-10 relative to the
    /// largest element) and unit trace (1e-8).
    pub fn from_elements(grid: PhaseSpaceGrid<T>, elements: Array2<Complex<T>>) -> Result<Self> {
        let rho = Self::from_elements_unchecked(grid, elements)?;
        let herm = rho.hermiticity_error();
        if herm > T::lit(1e-10) {
            return Err(EchoError::InvalidInput(format!("matrix is not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr - T::one()).abs() > T::lit(1e-8) {
            return Err(EchoError::InvalidInput(format!("trace {tr} != 1")));
        }
        Ok(rho)
    }

    /// Wraps a matrix checking only its shape.
    pub fn from_elements_unchecked(
        grid: PhaseSpaceGrid<T>,
        elements: Array2<Complex<T>>,
    ) -> Result<Self> {
        let n = grid.n_points();
        if elements.dim() != (n, n) {
            return Err(EchoError::InvalidInput(format!(
                "density matrix shape {:?} does not match {n} points",
                elements.dim()
            )));
        }
        let elements = if elements.is_standard_layout() {
            elements
        } else {
            elements.as_standard_layout().into_owned()
        };
        Ok(Self { grid, elements })
    }

    /// Projector `|psi><psi|`.
    pub fn from_pure(psi: &WaveFunction<T>) -> Self {
        let a = psi.amplitudes();
        let n = a.len();
        let elements = Array2::from_shape_fn((n, n), |(i, j)| a[i] * a[j].conj());
        Self { grid: *psi.grid(), elements }
    }

    /// Convex combination `sum_k w_k |psi_k><psi_k|`; weights are normalized.
    pub fn mixture(states: &[(T, &WaveFunction<T>)]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| EchoError::InvalidInput("empty mixture".into()))?;
        let grid = *first.1.grid();
        let total: T = states.iter().map(|(w, _)| *w).sum();
        if states.iter().any(|(w, _)| *w < T::zero()) || total <= T::zero() {
            return Err(EchoError::InvalidInput("mixture weights must be non-negative".into()));
        }
        let n = grid.n_points();
        let mut elements = Array2::zeros((n, n));
        for (w, psi) in states {
            grid.ensure_same(psi.grid())?;
            let a = psi.amplitudes();
            let w = *w / total;
            for ((i, j), e) in elements.indexed_iter_mut() {
                *e = *e + a[i] * a[j].conj() * w;
            }
        }
        Ok(Self { grid, elements })
    }

    #[inline]
    pub fn grid(&self) -> &PhaseSpaceGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn elements(&self) -> &Array2<Complex<T>> {
        &self.elements
    }

    #[inline]
    pub fn elements_mut(&mut self) -> &mut Array2<Complex<T>> {
        &mut self.elements
    }

    pub fn into_elements(self) -> Array2<Complex<T>> {
        self.elements
    }

    /// `sum_i Re rho_ii dx`.
    pub fn trace(&self) -> T {
        self.elements.diag().iter().map(|c| c.re).sum::<T>() * self.grid.dx()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`, relative to the largest element.
    pub fn hermiticity_error(&self) -> T {
        let n = self.grid.n_points();
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..n {
            for j in 0..n {
                let a = self.elements[[i, j]];
                scale = scale.max(a.norm());
                if j >= i {
                    worst = worst.max((a - self.elements[[j, i]].conj()).norm());
                }
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    /// Position probability density `rho(x_i, x_i)`.
    pub fn diagonal(&self) -> Vec<T> {
        self.elements.diag().iter().map(|c| c.re).collect()
    }

    pub fn boundary_probability(&self, cells: usize) -> T {
        boundary_weight(self.diagonal().into_iter(), self.grid.n_points(), cells) * self.grid.dx()
    }

    /// Momentum probability density in signed FFT order.
    pub fn momentum_density(&self, fft: &FftPair<T>) -> Vec<T> {
        let g = &self.grid;
        let mut m = self.elements.clone();
        let mut scratch = fft.make_scratch();
        // rows: sum_j rho_ij e^{+2 pi i j k / n}
        fft.inverse_rows(&mut m, &mut scratch);
        transpose_in_place(&mut m);
        // columns: sum_i e^{-2 pi i i k / n} (...)
        fft.forward_rows(&mut m, &mut scratch);
        let scale = g.dx() * g.dx() / (T::TAU() * g.hbar());
        m.diag().iter().map(|c| c.re * scale).collect()
    }

    pub fn mean_x(&self) -> T {
        let dx = self.grid.dx();
        self.diagonal()
            .iter()
            .enumerate()
            .map(|(j, w)| *w * self.grid.position(j))
            .sum::<T>()
            * dx
    }

    pub fn variance_x(&self) -> T {
        let m = self.mean_x();
        let dx = self.grid.dx();
        self.diagonal()
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let d = self.grid.position(j) - m;
                *w * d * d
            })
            .sum::<T>()
            * dx
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

    /// `<psi| rho |psi>` with lattice measures.
    pub fn expectation_in(&self, psi: &WaveFunction<T>) -> Result<T> {
        self.grid.ensure_same(psi.grid())?;
        let a = psi.amplitudes();
        let mut acc = Complex::new(T::zero(), T::zero());
        for (i, row) in self.elements.outer_iter().enumerate() {
            let mut r = Complex::new(T::zero(), T::zero());
            for (e, b) in row.iter().zip(a) {
                r = r + *e * *b;
            }
            acc = acc + a[i].conj() * r;
        }
        let dx = self.grid.dx();
        Ok(acc.re * dx * dx)
    }

    pub fn cast<U: Real>(&self) -> DensityMatrix<U> {
        DensityMatrix {
            grid: self.grid.cast(),
            elements: self
                .elements
                .mapv(|c| Complex::new(U::lit(c.re.as_f64()), U::lit(c.im.as_f64()))),
        }
    }
}

/// Raw `Tr(a b) dx^2` before clipping.
pub fn overlap_trace_raw<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> Result<Complex<T>> {
    a.grid.ensure_same(&b.grid)?;
    let n = a.grid.n_points();
    let ea = a.elements.as_slice().expect("standard layout");
    let eb = b.elements.as_slice().expect("standard layout");
    let mut re = T::zero();
    let mut im = T::zero();
    for i in 0..n {
        for j in 0..n {
            let x = ea[i * n + j];
            let y = eb[j * n + i];
            re += x.re * y.re - x.im * y.im;
            im += x.re * y.im + x.im * y.re;
        }
    }
    let dx2 = a.grid.dx() * a.grid.dx();
    Ok(Complex::new(re * dx2, im * dx2))
}

/// `Tr(a b)` for two density matrices on the same grid, clipped to
/// `[0, 1 + 1e-8]`.
pub fn overlap_trace<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> Result<T> {
    let raw = overlap_trace_raw(a, b)?;
    let v = raw.re;
    if v < T::zero() {
        // discretization noise only; real overlaps of positive operators are >= 0
        debug_log_clip(v.as_f64(), raw.im.as_f64());
    }
    Ok(v.max(T::zero()).min(T::one() + T::lit(1e-8)))
}

/// Purity `Tr rho^2`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    let dx2 = rho.grid.dx() * rho.grid.dx();
    // Hermitian: Tr rho^2 = sum |rho_ij|^2
    let v = rho.elements.iter().map(|c| c.norm_sqr()).sum::<T>() * dx2;
    v.max(T::zero()).min(T::one() + T::lit(1e-8))
}

fn debug_log_clip(re: f64, im: f64) {
    if std::env::var_os("ECHO_DEBUG").is_some() {
        eprintln!("overlap_trace: clipped raw value {re:e} (imag {im:e})");
    }
}
