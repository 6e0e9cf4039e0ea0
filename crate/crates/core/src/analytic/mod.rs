//! Closed-form references: the inverted-oscillator echo, the fringe decay
//! rate and classical Lyapunov exponents.

pub mod io;
pub mod lyapunov;

pub use io::{io_echo_exact, io_long_time_rate, IOEchoParams};
pub use lyapunov::{
    chaotic_sea_lyapunov, leapfrog_step, lyapunov_benettin, lyapunov_benettin_with, BenettinOptions,
    ChaoticSeaEstimate, ClassicalState, LyapunovEstimate,
};

use crate::scalar::Real;

/// Decay rate `D k_p^2` of momentum fringes `cos(k_p p)` of the Wigner
/// function under momentum diffusion `D hbar^2`, with `k_p` in units of
/// `1/hbar` per momentum.
pub fn fringe_decay_rate<T: Real>(diffusion_d: T, k_p: T) -> T {
    diffusion_d * k_p * k_p
}
