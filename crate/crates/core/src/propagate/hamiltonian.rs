use crate::error::{EchoError, Result};
use crate::phase_space::PhaseSpaceGrid;
use crate::scalar::Real;

/// Potential energy `V0(x, t)`. Every variant is a static part plus an
/// optional drive linear in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential<T> {
    /// `a4 x^4 - a2 x^2 + drive_amp x cos(drive_freq t)`.
    DoubleWell { a4: T, a2: T, drive_amp: T, drive_freq: T },
    /// `-m lambda0^2 x^2 / 2`.
    InvertedOscillator { lambda0: T },
    /// `m omega^2 x^2 / 2`.
    Harmonic { omega: T },
    Free,
}

impl<T: Real> Potential<T> {
    /// Chaotic driven double well used by the acceptance scenarios.
    pub fn default_double_well() -> Self {
        Potential::DoubleWell {
            a4: T::lit(0.5),
            a2: T::lit(10.0),
            drive_amp: T::lit(10.0),
            drive_freq: T::lit(6.07),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec<T> {
    /// Particle mass. `T::infinity()` freezes the kinetic term.
    pub mass: T,
    pub potential: Potential<T>,
}

impl<T: Real> HamiltonianSpec<T> {
    pub fn new(mass: T, potential: Potential<T>) -> Result<Self> {
        let h = Self { mass, potential };
        h.validate()?;
        Ok(h)
    }

    pub fn unit_mass(potential: Potential<T>) -> Self {
        Self { mass: T::one(), potential }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) {
            return Err(EchoError::InvalidInput(format!("mass must be positive, got {}", self.mass)));
        }
        let finite = |v: T| v.is_finite();
        let ok = match self.potential {
            Potential::DoubleWell { a4, a2, drive_amp, drive_freq } => {
                a4 > T::zero() && a2 > T::zero() && finite(a4) && finite(a2) && finite(drive_amp) && finite(drive_freq)
            }
            Potential::InvertedOscillator { lambda0 } => lambda0 > T::zero() && finite(lambda0),
            Potential::Harmonic { omega } => omega > T::zero() && finite(omega),
            Potential::Free => true,
        };
        if ok {
            Ok(())
        } else {
            Err(EchoError::InvalidInput(format!("invalid potential parameters {:?}", self.potential)))
        }
    }

    /// True when the kinetic term is switched off.
    pub fn frozen(&self) -> bool {
        self.mass.is_infinite()
    }

    /// Time-independent part of `V0`.
    pub fn static_potential(&self, x: T) -> T {
        let half = T::lit(0.5);
        match self.potential {
            Potential::DoubleWell { a4, a2, .. } => {
                let x2 = x * x;
                a4 * x2 * x2 - a2 * x2
            }
            Potential::InvertedOscillator { lambda0 } => -half * self.mass_or_one() * lambda0 * lambda0 * x * x,
            Potential::Harmonic { omega } => half * self.mass_or_one() * omega * omega * x * x,
            Potential::Free => T::zero(),
        }
    }

    /// Coefficient `f(t)` of the drive term `f(t) x`.
    pub fn drive(&self, t: T) -> T {
        match self.potential {
            Potential::DoubleWell { drive_amp, drive_freq, .. } => drive_amp * (drive_freq * t).cos(),
            _ => T::zero(),
        }
    }

    pub fn is_driven(&self) -> bool {
        matches!(self.potential, Potential::DoubleWell { drive_amp, .. } if drive_amp != T::zero())
    }

    pub fn potential(&self, x: T, t: T) -> T {
        self.static_potential(x) + self.drive(t) * x
    }

    /// `-dV0/dx`.
    pub fn force(&self, x: T, t: T) -> T {
        let two = T::lit(2.0);
        let f_static = match self.potential {
            Potential::DoubleWell { a4, a2, .. } => -(T::lit(4.0) * a4 * x * x * x - two * a2 * x),
            Potential::InvertedOscillator { lambda0 } => self.mass_or_one() * lambda0 * lambda0 * x,
            Potential::Harmonic { omega } => -self.mass_or_one() * omega * omega * x,
            Potential::Free => T::zero(),
        };
        f_static - self.drive(t)
    }

    /// `d^2 V0 / dx^2`.
    pub fn curvature(&self, x: T) -> T {
        match self.potential {
            Potential::DoubleWell { a4, a2, .. } => T::lit(12.0) * a4 * x * x - T::lit(2.0) * a2,
            Potential::InvertedOscillator { lambda0 } => -self.mass_or_one() * lambda0 * lambda0,
            Potential::Harmonic { omega } => self.mass_or_one() * omega * omega,
            Potential::Free => T::zero(),
        }
    }

    pub fn energy(&self, x: T, p: T, t: T) -> T {
        let kinetic = if self.frozen() { T::zero() } else { p * p / (T::lit(2.0) * self.mass) };
        kinetic + self.potential(x, t)
    }

    /// Bound on `|V0(x, t)|` over the grid and all times.
    pub fn max_abs_potential(&self, grid: &PhaseSpaceGrid<T>) -> T {
        let amp = match self.potential {
            Potential::DoubleWell { drive_amp, .. } => drive_amp.abs(),
            _ => T::zero(),
        };
        (0..grid.n_points())
            .map(|j| {
                let x = grid.position(j);
                self.static_potential(x).abs() + amp * x.abs()
            })
            .fold(T::zero(), T::max)
    }

    // quadratic potentials are written with the physical mass; a frozen
    // kinetic term must not zero them out
    fn mass_or_one(&self) -> T {
        if self.frozen() {
            T::one()
        } else {
            self.mass
        }
    }
}

/// `V(x)` in the perturbation `V(x) J(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingFunction<T> {
    /// `V(x) = x`.
    Position,
    /// Arbitrary real values on the grid points.
    Tabulated(Vec<T>),
}

impl<T: Real> CouplingFunction<T> {
    pub fn values(&self, grid: &PhaseSpaceGrid<T>) -> Result<Vec<T>> {
        match self {
            CouplingFunction::Position => Ok(grid.positions()),
            CouplingFunction::Tabulated(v) => {
                if v.len() != grid.n_points() {
                    return Err(EchoError::InvalidInput(format!(
                        "tabulated coupling has {} values for {} grid points",
                        v.len(),
                        grid.n_points()
                    )));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(EchoError::InvalidInput("tabulated coupling is not finite".into()));
                }
                Ok(v.clone())
            }
        }
    }

    pub fn is_position(&self) -> bool {
        matches!(self, CouplingFunction::Position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_and_curvature_are_derivatives_of_the_potential() {
        let hs = [
            HamiltonianSpec::unit_mass(Potential::<f64>::default_double_well()),
            HamiltonianSpec::new(2.0, Potential::InvertedOscillator { lambda0: 1.3 }).unwrap(),
            HamiltonianSpec::new(0.5, Potential::Harmonic { omega: 2.0 }).unwrap(),
        ];
        let h = 1e-5;
        for ham in hs {
            for &x in &[-2.3, -0.4, 0.0, 1.7] {
                let t = 0.37;
                let dv = (ham.potential(x + h, t) - ham.potential(x - h, t)) / (2.0 * h);
                assert!((ham.force(x, t) + dv).abs() < 1e-5 * (1.0 + dv.abs()));
                let d2 = (ham.force(x - h, t) - ham.force(x + h, t)) / (2.0 * h);
                assert!((ham.curvature(x) - d2).abs() < 1e-5 * (1.0 + d2.abs()));
            }
        }
    }

    #[test]
    fn double_well_layout() {
        let ham = HamiltonianSpec::unit_mass(Potential::<f64>::default_double_well());
        // minima at x^2 = a2 / (2 a4) = 10, barrier a2^2 / (4 a4) = 50
        assert!((ham.static_potential(10f64.sqrt()) + 50.0).abs() < 1e-12);
        assert!((ham.drive(0.0) - 10.0).abs() < 1e-12);
        assert!(ham.is_driven());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HamiltonianSpec::new(0.0, Potential::<f64>::Free).is_err());
        assert!(HamiltonianSpec::new(1.0, Potential::Harmonic { omega: -1.0 }).is_err());
        assert!(HamiltonianSpec::new(f64::INFINITY, Potential::<f64>::Free).unwrap().frozen());
    }

    #[test]
    fn tabulated_coupling_is_checked_against_the_grid() {
        let g = PhaseSpaceGrid::<f64>::new(16, -1.0, 1.0, 1.0).unwrap();
        assert!(CouplingFunction::Tabulated(vec![0.0; 15]).values(&g).is_err());
        assert_eq!(CouplingFunction::Position.values(&g).unwrap(), g.positions());
    }
}
