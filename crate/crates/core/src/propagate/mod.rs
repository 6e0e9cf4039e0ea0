//! Unitary split-operator propagation and the white-noise master equation.

pub mod hamiltonian;
pub mod master;
pub mod params;
pub mod split;

pub use hamiltonian::{CouplingFunction, HamiltonianSpec, Potential};
pub use master::{evolve_master, evolve_master_with, MasterStepper};
pub use params::{EvolutionParams, DEFAULT_LEAKAGE_TOLERANCE, LEAKAGE_CELLS};
pub use split::{evolve_unitary, evolve_unitary_with, Perturbation, SourceSeries, SplitStepper, Trajectory};
