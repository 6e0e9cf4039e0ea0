//! Loschmidt echo and purity decay of a quantum system driven by a noisy
//! Hamiltonian perturbation.

pub mod analytic;
pub mod error;
pub mod noise;
pub mod observables;
pub mod phase_space;
pub mod propagate;
pub mod scalar;

pub use error::{EchoError, Result};
pub use scalar::Real;

/// Double-precision instances used by the runner and the tests.
pub type Grid = phase_space::PhaseSpaceGrid<f64>;
pub type Wave = phase_space::WaveFunction<f64>;
pub type Density = phase_space::DensityMatrix<f64>;
pub type Wigner = phase_space::WignerFunction<f64>;
pub type Hamiltonian = propagate::HamiltonianSpec<f64>;
pub type Evolution = propagate::EvolutionParams<f64>;
pub type Noise = noise::NoiseProcess<f64>;

/// Single-precision instances.
pub type Grid32 = phase_space::PhaseSpaceGrid<f32>;
pub type Wave32 = phase_space::WaveFunction<f32>;
pub type Density32 = phase_space::DensityMatrix<f32>;
pub type Wigner32 = phase_space::WignerFunction<f32>;
pub type Hamiltonian32 = propagate::HamiltonianSpec<f32>;
pub type Evolution32 = propagate::EvolutionParams<f32>;
pub type Noise32 = noise::NoiseProcess<f32>;
