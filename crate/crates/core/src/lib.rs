//! Condensate excitation by a potential dip swept through a harmonic trap: spectra,
//! Gross-Pitaevskii dynamics, stationary states and their branches.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
mod linalg;
pub mod oscillator;
pub mod potentials;
pub mod scalar;
pub mod spectrum;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{inner_product, Dim, Grid, WaveField};
pub use potentials::{Amplitude, PotentialSpec, SweepSchedule};
pub use scalar::Real;

/// Double-precision aliases used by the command-line front end.
pub type Grid64 = Grid<f64>;
pub type Field64 = WaveField<f64>;
pub type Potential64 = PotentialSpec<f64>;
pub type Schedule64 = SweepSchedule<f64>;
pub type Stationary64 = stationary::StationaryState<f64>;
pub type Branch64 = stationary::Branch<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type LevelScan64 = spectrum::LevelScan<f64>;

/// Single-precision aliases.
pub type Grid32 = Grid<f32>;
pub type Field32 = WaveField<f32>;
pub type Potential32 = PotentialSpec<f32>;
