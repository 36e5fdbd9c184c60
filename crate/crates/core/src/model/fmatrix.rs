//! Spectral density matrices at the reference direction (the pole).
//!
//! Rank-2 fields: the density is a 6x6 matrix in Voigt form with pair
//! order `(-1,-1), (0,0), (1,1), (0,1), (-1,1), (-1,0)`, the entries being
//! the tensor components themselves. Its trace is the Voigt trace.

use nalgebra::Matrix6;

use super::EllipsePoint;
use crate::error::{domain, Result};
use crate::geometry::Mat3;

const SIMPLEX_TOL: f64 = 1e-12;

/// The transverse extreme point: entries `(4,4)` and `(6,6)` equal `1/2`.
pub const EXTREME_D1: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];
/// The second isolated extreme point.
pub const EXTREME_D2: [f64; 5] = [0.0, 1.0, 0.0, 0.0, 0.0];

/// Affine coordinates `(u1, .., u5)` of an admissible tensor density.
///
/// `u1..u4` are nonnegative and sum to one; `|u5| <= sqrt(u3 u4 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexCoords {
    u: [f64; 5],
}

impl SimplexCoords {
    pub fn new(u: [f64; 5]) -> Result<Self> {
        if u.iter().any(|x| !x.is_finite()) {
            return domain("simplex coordinates must be finite");
        }
        if u[..4].iter().any(|&x| x < -SIMPLEX_TOL) {
            return domain(format!("u1..u4 must be nonnegative, got {:?}", &u[..4]));
        }
        let s: f64 = u[..4].iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return domain(format!("u1 + .. + u4 = {s}, expected 1"));
        }
        let bound = (u[2].max(0.0) * u[3].max(0.0) / 2.0).sqrt();
        if u[4].abs() > bound + SIMPLEX_TOL {
            return domain(format!("|u5| = {} exceeds sqrt(u3 u4 / 2) = {bound}", u[4].abs()));
        }
        Ok(Self { u })
    }

    /// The point `u3 = v1`, `u4 = 1 - v1`, `u5 = v2` on the shape family.
    pub fn from_shape(v: EllipsePoint) -> Result<Self> {
        Self::new([0.0, 0.0, v.v1, 1.0 - v.v1, v.v2])
    }

    pub fn values(&self) -> [f64; 5] {
        self.u
    }

    /// The shape parameter, or `(1/2, 0)` when `u3 + u4 = 0`.
    pub fn shape(&self) -> EllipsePoint {
        let s = self.u[2] + self.u[3];
        if s == 0.0 {
            EllipsePoint::new(0.5, 0.0)
        } else {
            EllipsePoint::new(self.u[2] / s, self.u[4] / s)
        }
    }
}

/// Density of a vector field at the pole: `diag(u1/2, u2, u1/2)`.
///
/// At a general direction `p` the same density is `u1 (I - p p^T) / 2 + u2 p p^T`.
pub fn f_matrix_vector(u1: f64, u2: f64) -> Result<Mat3> {
    if !(u1 >= -SIMPLEX_TOL && u2 >= -SIMPLEX_TOL && (u1 + u2 - 1.0).abs() <= SIMPLEX_TOL) {
        return domain(format!("({u1}, {u2}) is not in the unit simplex"));
    }
    Ok(Mat3::from_diagonal(&nalgebra::Vector3::new(u1 / 2.0, u2, u1 / 2.0)))
}

/// Voigt density for arbitrary coordinates, without admissibility checks.
pub fn voigt_from_coords(u: &[f64; 5]) -> Matrix6<f64> {
    let [u1, u2, u3, u4, u5] = *u;
    let mut f = Matrix6::zeros();
    f[(0, 0)] = u3 / 2.0 + u2 / 3.0;
    f[(2, 2)] = f[(0, 0)];
    f[(0, 2)] = u3 / 2.0 - u2 / 3.0;
    f[(2, 0)] = f[(0, 2)];
    f[(1, 1)] = u4;
    f[(0, 1)] = u5;
    f[(1, 0)] = u5;
    f[(1, 2)] = u5;
    f[(2, 1)] = u5;
    f[(3, 3)] = u1 / 2.0;
    f[(5, 5)] = u1 / 2.0;
    f[(4, 4)] = u2 / 3.0;
    f
}

/// Density of a tensor field at the pole in Voigt form.
pub fn f_matrix_tensor(u: &SimplexCoords) -> Matrix6<f64> {
    voigt_from_coords(&u.u)
}

/// Recover `(u1, .., u5)` from the Voigt entries.
pub fn coords_from_voigt(f: &Matrix6<f64>) -> [f64; 5] {
    [2.0 * f[(3, 3)], 3.0 * f[(4, 4)], 2.0 * (f[(0, 0)] - f[(4, 4)]), f[(1, 1)], f[(0, 1)]]
}

/// The shape-family extreme point for `v` (an element of the boundary
/// ellipse when `v` lies on it, a convex combination otherwise).
pub fn u_from_v(v: EllipsePoint) -> Result<Matrix6<f64>> {
    if !v.is_admissible() {
        return domain(format!("shape ({}, {}) lies outside the elliptic region", v.v1, v.v2));
    }
    Ok(voigt_from_coords(&[0.0, 0.0, v.v1, 1.0 - v.v1, v.v2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_points_have_documented_entries() {
        let d1 = f_matrix_tensor(&SimplexCoords::new(EXTREME_D1).unwrap());
        assert_eq!(d1[(3, 3)], 0.5);
        assert_eq!(d1[(5, 5)], 0.5);
        assert_eq!(d1.trace(), 1.0);
        let d2 = f_matrix_tensor(&SimplexCoords::new(EXTREME_D2).unwrap());
        for k in [0, 2, 4] {
            assert!((d2[(k, k)] - 1.0 / 3.0).abs() < 1e-16);
        }
        assert!((d2[(0, 2)] + 1.0 / 3.0).abs() < 1e-16);
        let dv = u_from_v(EllipsePoint::new(0.3, 0.2)).unwrap();
        assert!((dv[(0, 0)] - 0.15).abs() < 1e-16 && (dv[(0, 2)] - 0.15).abs() < 1e-16);
        assert!((dv[(1, 1)] - 0.7).abs() < 1e-16);
        assert_eq!(dv[(0, 1)], 0.2);
        assert_eq!(dv[(1, 2)], 0.2);
    }

    #[test]
    fn coords_round_trip() {
        let u = [0.1, 0.2, 0.3, 0.4, 0.15];
        let back = coords_from_voigt(&voigt_from_coords(&u));
        for k in 0..5 {
            assert!((back[k] - u[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn coordinate_checks() {
        assert!(SimplexCoords::new([0.5, 0.5, 0.0, 0.0, 0.0]).is_ok());
        assert!(SimplexCoords::new([0.5, 0.6, 0.0, 0.0, 0.0]).is_err());
        assert!(SimplexCoords::new([0.0, 0.0, 0.5, 0.5, 0.36]).is_err());
        assert!(u_from_v(EllipsePoint::new(1.0, 0.0)).is_ok());
        assert!(u_from_v(EllipsePoint::new(1.1, 0.0)).is_err());
    }

    #[test]
    fn vector_density_at_pole() {
        let f = f_matrix_vector(0.6, 0.4).unwrap();
        assert_eq!(f[(0, 0)], 0.3);
        assert_eq!(f[(1, 1)], 0.4);
        assert!((f.trace() - 1.0).abs() < 1e-16);
        assert!(f_matrix_vector(0.6, 0.5).is_err());
    }
}
