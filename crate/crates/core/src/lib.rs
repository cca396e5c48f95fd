//! Renormalized energies of vortices on closed surfaces: Green's functions,
//! harmonic forms and flux lattices, canonical harmonic unit fields,
//! discrete Ginzburg–Landau energies and vortex ball detection.

pub mod canonical;
pub mod error;
pub mod gl;
pub mod geometry;
pub mod greens;
pub mod harmonic;
pub mod linalg;
pub mod quad;
pub mod renorm;
pub mod vortex;

pub use error::{Error, Result};
