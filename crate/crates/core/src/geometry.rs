//! Directions, rotations and rank-4 tensors in the spherical axis order.
//!
//! Every 3-vector in this crate is stored as `[v_-1, v_0, v_1]`, which is
//! the Cartesian triple `(y, z, x)`. A direction with polar angle `theta`
//! (measured from axis 1) and azimuth `phi` is
//! `(sin theta sin phi, cos theta, sin theta cos phi)`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A point on the unit sphere given by polar and azimuthal angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularPair {
    theta: f64,
    phi: f64,
}

impl AngularPair {
    /// Accepts `theta` in `[0, pi]` and any finite `phi`, which is wrapped
    /// into `[0, 2 pi)`. At either pole the azimuth is set to zero.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return domain("angles must be finite");
        }
        let slack = 1e-12;
        if theta < -slack || theta > std::f64::consts::PI + slack {
            return domain(format!("polar angle {theta} outside [0, pi]"));
        }
        let theta = theta.clamp(0.0, std::f64::consts::PI);
        let mut phi = phi.rem_euclid(TWO_PI);
        if phi >= TWO_PI {
            phi = 0.0;
        }
        if theta == 0.0 || theta == std::f64::consts::PI {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    /// The north pole, i.e. the direction of axis 1.
    pub fn pole() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// Direction of a nonzero vector given in axis order.
    pub fn from_vector(v: &Vec3) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0) || !r.is_finite() {
            return domain("direction of a zero or non-finite vector");
        }
        let c = (v[1] / r).clamp(-1.0, 1.0);
        let theta = c.acos();
        let phi = if v[0] == 0.0 && v[2] == 0.0 { 0.0 } else { v[0].atan2(v[2]) };
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(st * sp, ct, st * cp)
    }

    /// The rotation that carries the pole onto this direction: a turn by
    /// `theta` about axis 0 followed by a turn by `phi` about the pole.
    pub fn rotation(&self) -> Mat3 {
        rotation_about_pole(self.phi) * rotation_about_axis0(self.theta)
    }
}

/// Rotation by `angle` about axis 1 (Cartesian z), in axis order.
pub fn rotation_about_pole(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    // Cartesian R_z acts on (x, y); rows/cols here are (y, z, x).
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Rotation by `angle` about Cartesian y (axis 0), taking z toward x.
pub fn rotation_about_axis0(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// A Haar-distributed element of SO(3), or of O(3) when `allow_reflection`
/// is set (in which case the determinant is -1 with probability one half).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, allow_reflection: bool) -> Mat3 {
    // Uniform unit quaternion.
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let cart = Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    );
    let mut k = from_cartesian(&cart);
    if allow_reflection && rng.random::<bool>() {
        k = -k;
    }
    k
}

/// Re-express a matrix given in Cartesian `(x, y, z)` order in axis order.
pub fn from_cartesian(m: &Mat3) -> Mat3 {
    const P: [usize; 3] = [1, 2, 0];
    Mat3::from_fn(|a, b| m[(P[a], P[b])])
}

/// A fourth-order tensor over three dimensions, stored densely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank4Tensor {
    pub data: [f64; 81],
}

impl Default for Rank4Tensor {
    fn default() -> Self {
        Self::zeros()
    }
}

/// Voigt pair order: `(-1,-1), (0,0), (1,1), (0,1), (-1,1), (-1,0)`.
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Position of the index pair `(i, j)` in the Voigt order.
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

impl Rank4Tensor {
    pub fn zeros() -> Self {
        Self { data: [0.0; 81] }
    }

    #[inline]
    fn at(i: usize, j: usize, l: usize, m: usize) -> usize {
        ((i * 3 + j) * 3 + l) * 3 + m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize, m: usize) -> f64 {
        self.data[Self::at(i, j, l, m)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, l: usize, m: usize, v: f64) {
        self.data[Self::at(i, j, l, m)] = v;
    }

    /// Entry of the tensor viewed as a 9x9 matrix over pairs `(ij), (lm)`.
    #[inline]
    pub fn pair(&self, ij: usize, lm: usize) -> f64 {
        self.data[ij * 9 + lm]
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        t.set(i, j, l, m, f(i, j, l, m));
                    }
                }
            }
        }
        t
    }

    /// Outer product `a_ij b_lm`.
    pub fn outer(a: &Mat3, b: &Mat3) -> Self {
        Self::from_fn(|i, j, l, m| a[(i, j)] * b[(l, m)])
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.data.iter_mut().for_each(|x| *x *= s);
        t
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += s * y;
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// `k_ia k_jb k_lc k_md T_abcd`, the tensor seen in a rotated frame.
    pub fn rotated(&self, k: &Mat3) -> Self {
        let mut cur = *self;
        // Contract one slot at a time; four passes of 3^5 work each.
        for slot in 0..4 {
            let mut next = Self::zeros();
            for idx in 0..81 {
                let mut d = [idx / 27, (idx / 9) % 3, (idx / 3) % 3, idx % 3];
                let target = d[slot];
                let mut s = 0.0;
                for a in 0..3 {
                    d[slot] = a;
                    s += k[(target, a)] * cur.get(d[0], d[1], d[2], d[3]);
                }
                next.data[idx] = s;
            }
            cur = next;
        }
        cur
    }

    /// Sum of `T_ijij` over all `i, j`.
    pub fn full_contraction(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.get(i, j, i, j);
            }
        }
        s
    }

    /// The 6x6 Voigt array `R_(ij)(lm)` over the pair order [`VOIGT_PAIRS`].
    pub fn to_voigt(&self) -> nalgebra::Matrix6<f64> {
        nalgebra::Matrix6::from_fn(|a, b| {
            let (i, j) = VOIGT_PAIRS[a];
            let (l, m) = VOIGT_PAIRS[b];
            self.get(i, j, l, m)
        })
    }

    /// Fill all 81 entries from a Voigt array, using the symmetries
    /// `T_ijlm = T_jilm = T_ijml`.
    pub fn from_voigt(v: &nalgebra::Matrix6<f64>) -> Self {
        Self::from_fn(|i, j, l, m| v[(voigt_index(i, j), voigt_index(l, m))])
    }
}
