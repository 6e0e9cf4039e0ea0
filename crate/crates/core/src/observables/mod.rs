//! Diagnostics of decay traces and Wigner functions: wavelength scales, the
//! phase-space region split and decay-rate fits.

pub mod fit;
pub mod regions;
pub mod scales;
pub mod trace;

pub use fit::{detect_floor, fit_decay_rates, fit_decay_rates_with, window_log_rate, FitModel, FitOptions, RateFit};
pub use regions::{region_decomposition, RegionSplit};
pub use scales::{fringe_amplitude, sigma_bar, sigma_bar_with, sigma_echo, sigma_echo_with, SigmaEcho};
pub use trace::DecayTrace;
