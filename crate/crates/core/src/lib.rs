//! Stochastic 3D MHD vorticity equations with divergence-free transport noise,
//! solved by a Fourier–Galerkin pseudo-spectral method on the unit torus.

pub mod cli;
pub mod config;
pub mod corrector;
pub mod error;
pub mod experiments;
pub mod field;
pub mod integrator;
pub mod io;
pub mod lattice;
pub mod noise;
pub mod operators;
pub mod transform;
pub mod vec3;

pub use error::{Error, Result};
pub use field::{SpectralField, State};
pub use lattice::{Lattice, Wavevector};
