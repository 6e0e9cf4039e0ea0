use crate::error::{EchoError, Result};
use crate::scalar::Real;

/// Uniform periodic position lattice and its conjugate momentum lattice.
///
/// Positions are `x_j = x_min + j dx` for `j in 0..n_points`, with
/// `dx = (x_max - x_min) / n_points` (the point `x_max` itself is the periodic
/// image of `x_min`). Momenta follow the signed FFT ordering
/// `p_k = 2 pi hbar k / (n_points dx)`, `k = 0, 1, .., n/2 - 1, -n/2, .., -1`,
/// so that `dx * dp * n_points = 2 pi hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceGrid<T> {
    n_points: usize,
    x_min: T,
    x_max: T,
    hbar: T,
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn new(n_points: usize, x_min: T, x_max: T, hbar: T) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(EchoError::InvalidInput(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(EchoError::InvalidInput(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if !(hbar.is_finite() && hbar > T::zero()) {
            return Err(EchoError::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { n_points, x_min, x_max, hbar })
    }

    /// Grid with `hbar = 1`.
    pub fn with_unit_hbar(n_points: usize, x_min: T, x_max: T) -> Result<Self> {
        Self::new(n_points, x_min, x_max, T::one())
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }
    #[inline]
    pub fn x_min(&self) -> T {
        self.x_min
    }
    #[inline]
    pub fn x_max(&self) -> T {
        self.x_max
    }
    #[inline]
    pub fn hbar(&self) -> T {
        self.hbar
    }
    #[inline]
    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }
    #[inline]
    pub fn dx(&self) -> T {
        self.length() / T::from_usize_exact(self.n_points)
    }
    #[inline]
    pub fn dp(&self) -> T {
        T::TAU() * self.hbar / self.length()
    }
    /// Largest representable momentum magnitude, `pi hbar / dx`.
    #[inline]
    pub fn p_max(&self) -> T {
        T::PI() * self.hbar / self.dx()
    }

    #[inline]
    pub fn position(&self, j: usize) -> T {
        self.x_min + T::from_usize_exact(j) * self.dx()
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    /// Signed FFT frequency index of bin `k`.
    #[inline]
    pub fn signed_index(&self, k: usize) -> isize {
        let n = self.n_points;
        if k < n / 2 {
            k as isize
        } else {
            k as isize - n as isize
        }
    }

    /// Momentum of FFT bin `k` (signed ordering).
    #[inline]
    pub fn momentum(&self, k: usize) -> T {
        T::from_isize(self.signed_index(k)).unwrap() * self.dp()
    }

    pub fn momenta(&self) -> Vec<T> {
        (0..self.n_points).map(|k| self.momentum(k)).collect()
    }

    /// Momentum of column `j` of a Wigner array, which stores momenta in
    /// ascending order: `p_j = (j - n/2) dp`.
    #[inline]
    pub fn momentum_ascending(&self, j: usize) -> T {
        T::from_isize(j as isize - (self.n_points / 2) as isize).unwrap() * self.dp()
    }

    pub fn momenta_ascending(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.momentum_ascending(j)).collect()
    }

    /// Index of the lattice point nearest to `x` (clamped to the grid).
    pub fn nearest_position_index(&self, x: T) -> usize {
        let j = ((x - self.x_min) / self.dx()).round();
        let j = j.max(T::zero()).min(T::from_usize_exact(self.n_points - 1));
        j.to_usize().unwrap_or(0)
    }

    /// Column of a Wigner array nearest to momentum `p`.
    pub fn nearest_momentum_column(&self, p: T) -> usize {
        let half = T::from_usize_exact(self.n_points / 2);
        let j = (p / self.dp() + half).round();
        let j = j.max(T::zero()).min(T::from_usize_exact(self.n_points - 1));
        j.to_usize().unwrap_or(0)
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(EchoError::GridMismatch)
        }
    }

    /// Same grid in another scalar type.
    pub fn cast<U: Real>(&self) -> PhaseSpaceGrid<U> {
        PhaseSpaceGrid {
            n_points: self.n_points,
            x_min: U::lit(self.x_min.as_f64()),
            x_max: U::lit(self.x_max.as_f64()),
            hbar: U::lit(self.hbar.as_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_lattices_are_fourier_consistent() {
        let g = PhaseSpaceGrid::new(256, -8.0, 8.0, 0.7).unwrap();
        let prod = g.dx() * g.dp() * 256.0;
        assert!((prod - std::f64::consts::TAU * 0.7).abs() < 1e-12);
        assert_eq!(g.signed_index(0), 0);
        assert_eq!(g.signed_index(127), 127);
        assert_eq!(g.signed_index(128), -128);
        assert_eq!(g.signed_index(255), -1);
        // symmetric around zero up to the single Nyquist bin
        let pm = g.momenta();
        let sum: f64 = pm.iter().sum();
        assert!((sum + g.p_max()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PhaseSpaceGrid::<f64>::new(100, -1.0, 1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::<f64>::new(4, -1.0, 1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::<f64>::new(64, 1.0, -1.0, 1.0).is_err());
        assert!(PhaseSpaceGrid::<f64>::new(64, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ascending_columns_round_trip() {
        let g = PhaseSpaceGrid::new(64, -4.0, 4.0, 1.0).unwrap();
        for j in 0..64 {
            assert_eq!(g.nearest_momentum_column(g.momentum_ascending(j)), j);
            assert_eq!(g.nearest_position_index(g.position(j)), j);
        }
    }
}
