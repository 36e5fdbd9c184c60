use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::geometry::{AngularPair, Mat3};

/// Real rotation matrices for harmonics of degree `0..=lmax`.
///
/// The degree-`l` matrix `D` satisfies `S_m(k x) = sum_n D_mn S_n(x)` for
/// the real harmonics `S` of [`crate::specfun::real_harmonics`]. Degree one
/// reproduces `k` itself. Higher degrees follow the Ivanic-Ruedenberg
/// recurrence, which builds degree `l` from degree `l - 1` and `k`.
pub fn wigner_d_matrices(lmax: usize, k: &Mat3) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(DMatrix::from_element(1, 1, 1.0));
    if lmax == 0 {
        return out;
    }
    out.push(DMatrix::from_fn(3, 3, |a, b| k[(a, b)]));
    let r1 = |i: i32, j: i32| k[((i + 1) as usize, (j + 1) as usize)];
    for l in 2..=lmax as i32 {
        let prev = &out[(l - 1) as usize];
        let pr = |a: i32, b: i32| prev[((a + l - 1) as usize, (b + l - 1) as usize)];
        let p = |i: i32, a: i32, b: i32| -> f64 {
            if b == l {
                r1(i, 1) * pr(a, l - 1) - r1(i, -1) * pr(a, -l + 1)
            } else if b == -l {
                r1(i, 1) * pr(a, -l + 1) + r1(i, -1) * pr(a, l - 1)
            } else {
                r1(i, 0) * pr(a, b)
            }
        };
        let size = (2 * l + 1) as usize;
        let mut cur = DMatrix::zeros(size, size);
        for m in -l..=l {
            for n in -l..=l {
                let d0 = if m == 0 { 1.0 } else { 0.0 };
                let am = m.abs() as f64;
                let lf = l as f64;
                let denom = if n.abs() < l { ((l + n) * (l - n)) as f64 } else { (2 * l * (2 * l - 1)) as f64 };
                let u = (((l + m) * (l - m)) as f64 / denom).sqrt();
                let v = 0.5 * ((1.0 + d0) * (lf + am - 1.0) * (lf + am) / denom).sqrt() * (1.0 - 2.0 * d0);
                let w = -0.5 * ((lf - am - 1.0) * (lf - am) / denom).max(0.0).sqrt() * (1.0 - d0);

                let mut val = 0.0;
                if u != 0.0 {
                    val += u * p(0, m, n);
                }
                if v != 0.0 {
                    let vv = if m == 0 {
                        p(1, 1, n) + p(-1, -1, n)
                    } else if m > 0 {
                        let d1: f64 = if m == 1 { 1.0 } else { 0.0 };
                        p(1, m - 1, n) * (1.0 + d1).sqrt() - p(-1, -m + 1, n) * (1.0 - d1)
                    } else {
                        let d1: f64 = if m == -1 { 1.0 } else { 0.0 };
                        p(1, m + 1, n) * (1.0 - d1) + p(-1, -m - 1, n) * (1.0 + d1).sqrt()
                    };
                    val += v * vv;
                }
                if w != 0.0 {
                    let ww = if m > 0 { p(1, m + 1, n) + p(-1, -m - 1, n) } else { p(1, m - 1, n) - p(-1, -m + 1, n) };
                    val += w * ww;
                }
                cur[((m + l) as usize, (n + l) as usize)] = val;
            }
        }
        out.push(cur);
    }
    out
}

/// The degree-`ell` real rotation matrix of `k`.
pub fn wigner_d_matrix(ell: usize, k: &Mat3) -> DMatrix<f64> {
    wigner_d_matrices(ell, k).pop().expect("at least degree zero")
}

/// Entry `(m, n)` of the degree-`ell` matrix for the rotation that carries
/// the pole to `p` (see [`AngularPair::rotation`]).
pub fn wigner_d_real(ell: usize, m: i32, n: i32, p: &AngularPair) -> Result<f64> {
    let l = ell as i32;
    if m.abs() > l || n.abs() > l {
        return domain(format!("orders ({m}, {n}) exceed degree {ell}"));
    }
    let d = wigner_d_matrix(ell, &p.rotation());
    Ok(d[((m + l) as usize, (n + l) as usize)])
}
