//! Special functions: spherical Bessel functions, real spherical
//! harmonics, real rotation matrices for harmonics, and quadrature rules
//! on the interval and the sphere.

mod bessel;
mod harmonics;
pub mod quadrature;
mod wigner;

pub use bessel::{spherical_bessel, spherical_bessel_array};
pub use harmonics::{harmonic_index, real_harmonic, real_harmonics, sph_len, HarmonicIndex};
pub use wigner::{wigner_d_matrices, wigner_d_matrix, wigner_d_real};

use crate::coupling::gg;
use crate::error::Result;

/// The integral over the unit sphere of a product of three real harmonics.
///
/// Expressed through two coupling coefficients, it is
/// `sqrt((2l1+1)(2l2+1) / (4 pi (2l+1))) g^{m[m1,m2]} g^{0[0,0]}`.
pub fn gaunt_integral(a: HarmonicIndex, b: HarmonicIndex, c: HarmonicIndex) -> Result<f64> {
    let (l1, l2, l) = (a.ell, b.ell, c.ell);
    if l > l1 + l2 || l1 > l + l2 || l2 > l + l1 || (l + l1 + l2) % 2 == 1 {
        return Ok(0.0);
    }
    let full = gg(l, l1, l2)?;
    let zero = full.get(0, 0, 0);
    let pref = (((2 * l1 + 1) * (2 * l2 + 1)) as f64 / (4.0 * std::f64::consts::PI * (2 * l + 1) as f64)).sqrt();
    Ok(pref * full.get(c.m, a.m, b.m) * zero)
}
