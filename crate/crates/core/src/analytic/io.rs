//! Exact echo of the inverted oscillator `H0 = p^2/2m - m lambda^2 x^2/2`
//! under white position noise.

use crate::error::{EchoError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IOEchoParams<T> {
    pub lambda0: T,
    /// Critical momentum width squared.
    pub sigma_bar_sq: T,
    /// Initial momentum dispersion.
    pub sigma_i: T,
}

impl<T: Real> IOEchoParams<T> {
    pub fn new(lambda0: T, sigma_bar_sq: T, sigma_i: T) -> Result<Self> {
        let p = Self { lambda0, sigma_bar_sq, sigma_i };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with a given `r` (and `sigma_i = 1`).
    pub fn from_r(lambda0: T, r: T) -> Result<Self> {
        Self::new(lambda0, T::lit(4.0) * r, T::one())
    }

    /// `sigma_bar^2 = 2 D hbar^2 / lambda0`: the width at which fringe
    /// production by the flow balances diffusion. With unit mass the closed
    /// form is exact for a packet with `sigma_p = lambda0 sigma_x`.
    pub fn from_diffusion(lambda0: T, diffusion_d: T, hbar: T, sigma_i: T) -> Result<Self> {
        Self::new(lambda0, T::lit(2.0) * diffusion_d * hbar * hbar / lambda0, sigma_i)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda0 > T::zero()
            && self.lambda0.is_finite()
            && self.sigma_bar_sq >= T::zero()
            && self.sigma_bar_sq.is_finite()
            && self.sigma_i > T::zero()
            && self.sigma_i.is_finite();
        if ok {
            Ok(())
        } else {
            Err(EchoError::InvalidInput(format!("invalid inverted-oscillator parameters {self:?}")))
        }
    }

    /// `r = sigma_bar^2 / (4 sigma_i^2)`.
    pub fn r(&self) -> T {
        self.sigma_bar_sq / (T::lit(4.0) * self.sigma_i * self.sigma_i)
    }
}

/// `M(t) = [1 + r sinh(2 lambda t) + r^2 (sinh^2(lambda t) - lambda^2 t^2)]^{-1/2}`.
pub fn io_echo_exact<T: Real>(params: &IOEchoParams<T>, t: T) -> Result<T> {
    params.validate()?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(EchoError::InvalidInput(format!("time must be finite and non-negative, got {t}")));
    }
    let r = params.r();
    let lt = params.lambda0 * t;
    let sh = lt.sinh();
    let radicand = T::one() + r * (lt + lt).sinh() + r * r * (sh * sh - lt * lt);
    if !(radicand >= T::one() - T::lit(1e-12)) {
        return Err(EchoError::Domain(format!("radicand {radicand:e} < 1 at lambda t = {lt}")));
    }
    Ok(T::one() / radicand.max(T::one()).sqrt())
}

/// Asymptotic decay rate `-d ln M / dt -> lambda0`, reached for
/// `lambda t >> ln(1/r)/2`.
pub fn io_long_time_rate<T: Real>(params: &IOEchoParams<T>) -> Result<T> {
    params.validate()?;
    if !(params.r() > T::zero()) {
        return Err(EchoError::NoDecay("r = 0: the echo stays at 1".into()));
    }
    Ok(params.lambda0)
}
