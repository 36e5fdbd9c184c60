use crate::error::{domain, Result};
use crate::geometry::AngularPair;

/// Degree and order of a real spherical harmonic, `|m| <= ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    pub ell: usize,
    pub m: i32,
}

impl HarmonicIndex {
    pub fn new(ell: usize, m: i32) -> Result<Self> {
        if m.unsigned_abs() as usize > ell {
            return domain(format!("order {m} exceeds degree {ell}"));
        }
        Ok(Self { ell, m })
    }

    /// Position in the flat layout `ell^2 + ell + m` used by [`real_harmonics`].
    pub fn flat(&self) -> usize {
        harmonic_index(self.ell, self.m)
    }
}

#[inline]
pub fn harmonic_index(ell: usize, m: i32) -> usize {
    ((ell * ell + ell) as isize + m as isize) as usize
}

/// Number of harmonics of degree at most `lmax`.
#[inline]
pub fn sph_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// All real harmonics of degree `0..=lmax` at `p`, in the flat layout.
///
/// The functions are orthonormal on the sphere and carry no
/// Condon-Shortley phase: for `m > 0` the harmonic is
/// `sqrt(2) N P_l^m(cos theta) cos(m phi)` and for `m < 0` it is
/// `sqrt(2) N P_l^|m|(cos theta) sin(|m| phi)`.
pub fn real_harmonics(lmax: usize, p: &AngularPair) -> Vec<f64> {
    let (st, ct) = p.theta().sin_cos();
    let n = lmax + 1;
    // Fully normalised associated Legendre values, row-major in (l, m).
    let mut plm = vec![0.0; n * n];
    let idx = |l: usize, m: usize| l * n + m;
    plm[idx(0, 0)] = 0.5 / std::f64::consts::PI.sqrt();
    for m in 1..=lmax {
        let prev = plm[idx(m - 1, m - 1)];
        plm[idx(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * st * prev;
    }
    for m in 0..lmax {
        plm[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * ct * plm[idx(m, m)];
    }
    for m in 0..=lmax {
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            plm[idx(l, m)] = a * (ct * plm[idx(l - 1, m)] - b * plm[idx(l - 2, m)]);
        }
    }

    let mut out = vec![0.0; sph_len(lmax)];
    let sqrt2 = std::f64::consts::SQRT_2;
    for m in 0..=lmax {
        let (sm, cm) = (m as f64 * p.phi()).sin_cos();
        for l in m..=lmax {
            let v = plm[idx(l, m)];
            if m == 0 {
                out[harmonic_index(l, 0)] = v;
            } else {
                out[harmonic_index(l, m as i32)] = sqrt2 * v * cm;
                out[harmonic_index(l, -(m as i32))] = sqrt2 * v * sm;
            }
        }
    }
    out
}

/// A single real harmonic; see [`real_harmonics`] for the convention.
pub fn real_harmonic(index: HarmonicIndex, p: &AngularPair) -> f64 {
    real_harmonics(index.ell, p)[index.flat()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quadrature::SphereRule;
    use std::f64::consts::PI;

    #[test]
    fn degree_one_is_the_direction_vector() {
        let p = AngularPair::new(0.8, 2.2).unwrap();
        let y = real_harmonics(1, &p);
        let c = (3.0 / (4.0 * PI)).sqrt();
        let u = p.unit_vector();
        for i in 0..3 {
            assert!((y[1 + i] - c * u[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_degree_two() {
        let p = AngularPair::new(1.3, 0.4).unwrap();
        let u = p.unit_vector();
        let (y, z, x) = (u[0], u[1], u[2]);
        let h = real_harmonics(2, &p);
        let c = (15.0 / (4.0 * PI)).sqrt();
        let want = [
            c * x * y,
            c * y * z,
            (5.0 / (16.0 * PI)).sqrt() * (3.0 * z * z - 1.0),
            c * x * z,
            c / 2.0 * (x * x - y * y),
        ];
        for (k, w) in want.iter().enumerate() {
            assert!((h[4 + k] - w).abs() < 1e-14, "m = {}", k as i32 - 2);
        }
    }

    #[test]
    fn orthonormal_to_degree_ten() {
        let lmax = 10;
        let rule = SphereRule::new(2 * lmax + 2);
        let len = sph_len(lmax);
        let mut gram = vec![0.0; len * len];
        for (p, w) in rule.nodes() {
            let y = real_harmonics(lmax, p);
            for a in 0..len {
                for b in 0..len {
                    gram[a * len + b] += w * y[a] * y[b];
                }
            }
        }
        for a in 0..len {
            for b in 0..len {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * len + b] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_order_rejected() {
        assert!(HarmonicIndex::new(2, 3).is_err());
        assert!(HarmonicIndex::new(2, -2).is_ok());
    }
}
