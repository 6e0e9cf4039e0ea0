//! Dominant-wavelength scales of Wigner functions along the momentum axis.
//! Momentum derivatives are spectral: a row of `W` Fourier transformed along
//! `p` is indexed by the chord `s = m dx`, and `d/dp` multiplies it by
//! `-i s / hbar`.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{EchoError, Result};
use crate::phase_space::{FftPair, WignerFunction};
use crate::scalar::Real;

fn rows_spectrum<T: Real>(w: &WignerFunction<T>, fft: &FftPair<T>) -> Array2<Complex<T>> {
    let mut m = w.values().mapv(|v| Complex::new(v, T::zero()));
    let mut scratch = fft.make_scratch();
    fft.forward_rows(&mut m, &mut scratch);
    m
}

/// `(s_m / hbar)^2` for every spectral column.
fn chord_weights<T: Real>(w: &WignerFunction<T>) -> Vec<T> {
    let g = w.grid();
    (0..g.n_points())
        .map(|k| {
            let s = T::from_isize(g.signed_index(k)).unwrap() * g.dx() / g.hbar();
            s * s
        })
        .collect()
}

/// `sigma_bar` with `sigma_bar^-2 = int (d_p W)^2 / int W^2`.
pub fn sigma_bar<T: Real>(w: &WignerFunction<T>) -> Result<T> {
    let fft = FftPair::new(w.grid().n_points());
    sigma_bar_with(w, &fft)
}

pub fn sigma_bar_with<T: Real>(w: &WignerFunction<T>, fft: &FftPair<T>) -> Result<T> {
    let g = w.grid();
    let norm2: T = w.values().iter().map(|v| *v * *v).sum::<T>() * g.dx() * g.dp();
    if !(norm2 > T::lit(1e-12)) {
        return Err(EchoError::DegenerateState(format!("int W^2 = {norm2:e}")));
    }
    let spec = rows_spectrum(w, fft);
    let wts = chord_weights(w);
    let mut num = T::zero();
    let mut den = T::zero();
    for row in spec.outer_iter() {
        for (c, s2) in row.iter().zip(&wts) {
            let a = c.norm_sqr();
            num += a * *s2;
            den += a;
        }
    }
    if !(num > T::zero()) {
        return Err(EchoError::DegenerateState("W has no momentum structure".into()));
    }
    Ok((den / num).sqrt())
}

/// Echo scale `sigma` with `sigma^-2 = |int W0 d_pp W_bar / int W0 W_bar|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEcho<T> {
    pub sigma: T,
    /// Signed `int W0 d_pp W_bar / int W0 W_bar`.
    pub raw_ratio: T,
}

pub fn sigma_echo<T: Real>(w0: &WignerFunction<T>, w_bar: &WignerFunction<T>) -> Result<SigmaEcho<T>> {
    let fft = FftPair::new(w0.grid().n_points());
    sigma_echo_with(w0, w_bar, &fft)
}

pub fn sigma_echo_with<T: Real>(
    w0: &WignerFunction<T>,
    w_bar: &WignerFunction<T>,
    fft: &FftPair<T>,
) -> Result<SigmaEcho<T>> {
    w0.grid().ensure_same(w_bar.grid())?;
    let g = w0.grid();
    let overlap: T =
        w0.values().iter().zip(w_bar.values().iter()).map(|(a, b)| *a * *b).sum::<T>() * g.dx() * g.dp();
    if !(overlap.abs() > T::lit(1e-12)) {
        return Err(EchoError::VanishingOverlap);
    }
    let a = rows_spectrum(w0, fft);
    let b = rows_spectrum(w_bar, fft);
    let wts = chord_weights(w0);
    let mut num = T::zero();
    let mut den = T::zero();
    for (ra, rb) in a.outer_iter().zip(b.outer_iter()) {
        for ((x, y), s2) in ra.iter().zip(rb.iter()).zip(&wts) {
            let c = (x.conj() * *y).re;
            num -= c * *s2;
            den += c;
        }
    }
    let raw_ratio = num / den;
    if !(raw_ratio != T::zero()) || !raw_ratio.is_finite() {
        return Err(EchoError::DegenerateState(format!("echo curvature ratio {raw_ratio}")));
    }
    Ok(SigmaEcho { sigma: T::one() / raw_ratio.abs().sqrt(), raw_ratio })
}

/// `|sum_p W(x0, p) e^{-i k_p p} dp|` on the lattice row nearest `x0`: the
/// amplitude of momentum fringes of wave vector `k_p`.
pub fn fringe_amplitude<T: Real>(w: &WignerFunction<T>, x0: T, k_p: T) -> T {
    let g = w.grid();
    let row = w.values().row(g.nearest_position_index(x0));
    let mut acc = Complex::new(T::zero(), T::zero());
    for (j, v) in row.iter().enumerate() {
        let ph = k_p * g.momentum_ascending(j);
        let (s, c) = ph.sin_cos();
        acc = acc + Complex::new(c, -s) * *v;
    }
    acc.norm() * g.dp()
}
