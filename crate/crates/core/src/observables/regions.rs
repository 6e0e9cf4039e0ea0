use ndarray::Array2;
use num_complex::Complex;

use crate::error::{EchoError, Result};
use crate::phase_space::fft::transpose_in_place;
use crate::phase_space::{FftPair, PhaseSpaceGrid, WignerFunction};
use crate::scalar::Real;

/// Split of the echo overlap `2 pi hbar sum W0 W_bar dx dp` into the
/// classical region, where `W0` is smooth and positive, and the oscillatory
/// remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSplit<T> {
    pub m_classical: T,
    pub m_oscillatory: T,
    /// Fraction of lattice cells classified as classical.
    pub classical_fraction: T,
}

/// Periodic convolution with an isotropic Gaussian of standard deviation
/// `width` in both `x` and `p`.
fn gaussian_smooth<T: Real>(grid: &PhaseSpaceGrid<T>, values: &Array2<T>, width: T, fft: &FftPair<T>) -> Array2<T> {
    let n = grid.n_points();
    let mut m = values.mapv(|v| Complex::new(v, T::zero()));
    let mut scratch = fft.make_scratch();
    let nf = T::from_usize_exact(n);
    let half = T::lit(0.5);
    let damp = |k: usize, d: T| {
        let q = T::TAU() * T::from_isize(grid.signed_index(k)).unwrap() / (nf * d);
        (-half * width * width * q * q).exp()
    };
    let along_p: Vec<T> = (0..n).map(|k| damp(k, grid.dp())).collect();
    let along_x: Vec<T> = (0..n).map(|k| damp(k, grid.dx())).collect();
    fft.forward_rows(&mut m, &mut scratch);
    for row in m.as_slice_mut().unwrap().chunks_exact_mut(n) {
        for (v, d) in row.iter_mut().zip(&along_p) {
            *v = *v * *d;
        }
    }
    fft.inverse_rows(&mut m, &mut scratch);
    transpose_in_place(&mut m);
    fft.forward_rows(&mut m, &mut scratch);
    for row in m.as_slice_mut().unwrap().chunks_exact_mut(n) {
        for (v, d) in row.iter_mut().zip(&along_x) {
            *v = *v * *d;
        }
    }
    fft.inverse_rows(&mut m, &mut scratch);
    transpose_in_place(&mut m);
    let inv = T::one() / (nf * nf);
    m.mapv(|c| c.re * inv)
}

/// Classical cells are those where `W0 > 0` and smoothing keeps more than
/// half of the local magnitude, `(G * W0) / (G * |W0|) > 1/2`; interference
/// fringes average out under the smoothing and fail the test.
/// `smoothing_width` must be at least `sqrt(hbar / 2)`.
pub fn region_decomposition<T: Real>(
    w0: &WignerFunction<T>,
    w_bar: &WignerFunction<T>,
    smoothing_width: T,
) -> Result<RegionSplit<T>> {
    w0.grid().ensure_same(w_bar.grid())?;
    let g = *w0.grid();
    let min_width = (g.hbar() / T::lit(2.0)).sqrt();
    if !(smoothing_width >= min_width * (T::one() - T::lit(1e-12))) {
        return Err(EchoError::InvalidInput(format!(
            "smoothing_width {smoothing_width} is below the hbar cell scale {min_width}"
        )));
    }
    let fft = FftPair::new(g.n_points());
    let v0 = w0.values();
    let smooth = gaussian_smooth(&g, v0, smoothing_width, &fft);
    let smooth_abs = gaussian_smooth(&g, &v0.mapv(|v| v.abs()), smoothing_width, &fft);
    let half = T::lit(0.5);
    let mut classical = T::zero();
    let mut oscillatory = T::zero();
    let mut cells = 0usize;
    for (((a, b), s), sa) in v0.iter().zip(w_bar.values().iter()).zip(smooth.iter()).zip(smooth_abs.iter()) {
        let prod = *a * *b;
        if *a > T::zero() && *s > half * *sa {
            classical += prod;
            cells += 1;
        } else {
            oscillatory += prod;
        }
    }
    let scale = T::TAU() * g.hbar() * g.dx() * g.dp();
    let total = T::from_usize_exact(g.n_points() * g.n_points());
    Ok(RegionSplit {
        m_classical: classical * scale,
        m_oscillatory: oscillatory * scale,
        classical_fraction: T::from_usize_exact(cells) / total,
    })
}
