//! Isotropic random vector and tensor fields in three dimensions.
//!
//! A field is described by a small spectral model: a handful of discrete
//! measures on the half-line of wavenumbers, plus (for rank-2 fields) a
//! mean and a shape parameter attached to one of the measures. From that
//! model the crate evaluates closed-form two-point correlation tensors,
//! builds the covariance of the spherical-harmonic expansion of the field
//! and draws Gaussian realizations from it.
//!
//! Component indices are `0, 1, 2` and stand for the spherical basis
//! labels `-1, 0, 1`, i.e. the Cartesian axes `y, z, x`. Axis `1` (label
//! `0`) is the pole of every spherical coordinate system used here.

pub mod bmodes;
pub mod correlation;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod io;
pub mod model;
pub mod simulate;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
