//! Grids, states, the Wigner transform and the overlap/purity primitives.

pub mod density;
pub mod fft;
pub mod grid;
pub mod snapshot;
pub mod wave;
pub mod wigner;

pub use density::{overlap_trace, overlap_trace_raw, purity, DensityMatrix};
pub use fft::FftPair;
pub use grid::PhaseSpaceGrid;
pub use wave::{make_cat_state, make_gaussian_state, momentum_dispersion, WaveFunction};
pub use wigner::{wigner_of_pure, wigner_transform, wigner_transform_with, WignerFunction};
