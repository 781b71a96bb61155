//! Numerical toolkit for the cubic Schrödinger equation with a periodic
//! background and a localized perturbation on the line.

pub mod boxes;
pub mod error;
pub mod io;
pub mod operators;
pub mod resonance;
pub mod solver;
pub mod spectral;
pub mod trees;
pub mod verify;

pub use error::{Error, Result};
