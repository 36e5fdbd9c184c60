//! Directional spectral densities expanded in harmonics of the direction.
//!
//! A density is a matrix-valued function on the sphere of the form
//! `sum_terms w sum_t T^t sqrt(4 pi / (2L+1)) S^t_L(p)`, where the `T^t`
//! are constant coupled tensors. The same representation drives the
//! closed-form bases, the quadrature oracle and the mode covariances.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{EllipsePoint, SimplexCoords};
use crate::coupling::gg;
use crate::geometry::{AngularPair, Mat3, Rank4Tensor};
use crate::specfun::{harmonic_index, real_harmonics};

/// Harmonic degree carried by each of the five tensor density families.
pub const TENSOR_DEGREES: [usize; 5] = [0, 0, 2, 2, 4];

/// One harmonic degree of a density.
#[derive(Debug, Clone)]
pub struct DensityTerm {
    pub degree: usize,
    pub weight: f64,
    /// `2 degree + 1` constant matrices over the field components.
    pub tensors: Vec<DMatrix<f64>>,
}

/// A density over `components` field components (1, 3, or 9 index pairs).
#[derive(Debug, Clone)]
pub struct DirectionalDensity {
    pub components: usize,
    pub terms: Vec<DensityTerm>,
}

/// Coupled rank-4 tensors spanning the isotropic-in-pairs symmetric part
/// of `S^2 (x) S^2`, grouped in the five families above.
#[derive(Debug, Clone)]
pub struct BasisTensorTable {
    /// `families[n][t + L]` for family `n` of degree `L = TENSOR_DEGREES[n]`.
    pub families: [Vec<Rank4Tensor>; 5],
}

fn g2(n: i32) -> Mat3 {
    let b = gg(2, 1, 1).expect("small degrees");
    Mat3::from_fn(|i, j| b.get(n, i as i32 - 1, j as i32 - 1))
}

/// The shared table of coupled tensors.
pub fn basis_tensor_table() -> &'static BasisTensorTable {
    static T: OnceLock<BasisTensorTable> = OnceLock::new();
    T.get_or_init(|| {
        let d = Mat3::identity();
        let iso = vec![Rank4Tensor::outer(&d, &d).scale(1.0 / 3.0)];
        let mut dev = Rank4Tensor::zeros();
        for n in -2..=2 {
            dev.add_scaled(&Rank4Tensor::outer(&g2(n), &g2(n)), 1.0 / 5f64.sqrt());
        }
        let mixed = (-2..=2)
            .map(|t| {
                let mut x = Rank4Tensor::outer(&d, &g2(t));
                x.add_scaled(&Rank4Tensor::outer(&g2(t), &d), 1.0);
                x.scale(1.0 / 6f64.sqrt())
            })
            .collect();
        let coupled = |l: usize| -> Vec<Rank4Tensor> {
            let b = gg(l, 2, 2).expect("small degrees");
            (-(l as i32)..=l as i32)
                .map(|t| {
                    let mut x = Rank4Tensor::zeros();
                    for n in -2..=2 {
                        for q in -2..=2 {
                            let c = b.get(t, n, q);
                            if c != 0.0 {
                                x.add_scaled(&Rank4Tensor::outer(&g2(n), &g2(q)), c);
                            }
                        }
                    }
                    x
                })
                .collect()
        };
        BasisTensorTable { families: [iso, vec![dev], mixed, coupled(2), coupled(4)] }
    })
}

fn harmonic_factor(l: usize) -> f64 {
    (4.0 * std::f64::consts::PI / (2 * l + 1) as f64).sqrt()
}

/// `M^n(p) = sum_t T^{n,t} sqrt(4 pi / (2L+1)) S^t_L(p)` for family
/// `n` in `1..=5`.
pub fn m_tensor(n: usize, p: &AngularPair) -> Rank4Tensor {
    assert!((1..=5).contains(&n), "tensor family index {n} outside 1..=5");
    let l = TENSOR_DEGREES[n - 1];
    let y = real_harmonics(l, p);
    let c = harmonic_factor(l);
    let mut out = Rank4Tensor::zeros();
    for (k, t) in basis_tensor_table().families[n - 1].iter().enumerate() {
        let s = y[harmonic_index(l, k as i32 - l as i32)];
        out.add_scaled(t, c * s);
    }
    out
}

/// Rank-2 analogue: `sum_t g^{t[i,j]}_{L[1,1]} sqrt(4 pi / (2L+1)) S^t_L(p)`
/// for `L` in `{0, 2}`.
pub fn m_tensor_rank2(l: usize, p: &AngularPair) -> Mat3 {
    assert!(l == 0 || l == 2, "rank-2 family degree must be 0 or 2");
    let b = gg(l, 1, 1).expect("small degrees");
    let y = real_harmonics(l, p);
    let c = harmonic_factor(l);
    let mut out = Mat3::zeros();
    for t in -(l as i32)..=l as i32 {
        let s = c * y[harmonic_index(l, t)];
        out += Mat3::from_fn(|i, j| b.get(t, i as i32 - 1, j as i32 - 1)) * s;
    }
    out
}

/// Weights of the five tensor families for a density with coordinates `u`.
pub fn tensor_density_coefficients(u: &[f64; 5]) -> [f64; 5] {
    let [u1, u2, u3, u4, u5] = *u;
    let s5 = 5f64.sqrt();
    let s27 = (2.0f64 / 7.0).sqrt();
    let s235 = (2.0f64 / 35.0).sqrt();
    [
        2.0 / 3.0 * u3 + u4 / 3.0 + 4.0 / 3.0 * u5,
        (2.0 * u1 + 4.0 / 3.0 * u2 + u3 / 3.0 + 2.0 / 3.0 * u4 - 4.0 / 3.0 * u5) / s5,
        (-2.0 * u3 + 2.0 * u4 + 2.0 * u5) / 3.0,
        s27 * (u1 - 4.0 / 3.0 * u2 + u3 / 3.0 + 2.0 / 3.0 * u4 - 4.0 / 3.0 * u5),
        s235 * (-4.0 * u1 + 2.0 / 3.0 * u2 + u3 + 2.0 * u4 - 4.0 * u5),
    ]
}

fn pair_matrix(t: &Rank4Tensor) -> DMatrix<f64> {
    DMatrix::from_fn(9, 9, |a, b| t.pair(a, b))
}

impl DirectionalDensity {
    /// The constant density of a scalar field.
    pub fn scalar() -> Self {
        Self {
            components: 1,
            terms: vec![DensityTerm { degree: 0, weight: 1.0, tensors: vec![DMatrix::from_element(1, 1, 1.0)] }],
        }
    }

    /// `u1 (I - p p^T) / 2 + u2 p p^T` for a vector field.
    pub fn vector(u1: f64, u2: f64) -> Self {
        let iso = (u1 + u2) / 3f64.sqrt();
        let aniso = -u1 / 6f64.sqrt() + (2.0f64 / 3.0).sqrt() * u2;
        let blocks = |l: usize| -> Vec<DMatrix<f64>> {
            let b = gg(l, 1, 1).expect("small degrees");
            (-(l as i32)..=l as i32)
                .map(|t| DMatrix::from_fn(3, 3, |i, j| b.get(t, i as i32 - 1, j as i32 - 1)))
                .collect()
        };
        Self {
            components: 3,
            terms: vec![
                DensityTerm { degree: 0, weight: iso, tensors: blocks(0) },
                DensityTerm { degree: 2, weight: aniso, tensors: blocks(2) },
            ],
        }
    }

    /// Extreme density of vector family `1` (transverse) or `2` (longitudinal).
    pub fn vector_family(n: usize) -> Self {
        match n {
            1 => Self::vector(1.0, 0.0),
            2 => Self::vector(0.0, 1.0),
            _ => panic!("vector family index {n} outside 1..=2"),
        }
    }

    /// The tensor density with coordinates `u` (not checked for admissibility).
    pub fn tensor(u: &[f64; 5]) -> Self {
        let w = tensor_density_coefficients(u);
        let table = basis_tensor_table();
        let terms = (0..5)
            .map(|n| DensityTerm {
                degree: TENSOR_DEGREES[n],
                weight: w[n],
                tensors: table.families[n].iter().map(pair_matrix).collect(),
            })
            .collect();
        Self { components: 9, terms }
    }

    pub fn tensor_coords(u: &SimplexCoords) -> Self {
        Self::tensor(&u.values())
    }

    /// Tensor family `1` or `2` (the isolated extreme points).
    pub fn tensor_family(n: usize) -> Self {
        match n {
            1 => Self::tensor(&super::EXTREME_D1),
            2 => Self::tensor(&super::EXTREME_D2),
            _ => panic!("isolated tensor family index {n} outside 1..=2"),
        }
    }

    /// The shape-family density at `v`.
    pub fn tensor_shape(v: EllipsePoint) -> Self {
        Self::tensor(&[0.0, 0.0, v.v1, 1.0 - v.v1, v.v2])
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.degree).max().unwrap_or(0)
    }

    /// The density at direction `p`.
    pub fn at(&self, p: &AngularPair) -> DMatrix<f64> {
        let y = real_harmonics(self.max_degree(), p);
        let mut out = DMatrix::zeros(self.components, self.components);
        for term in &self.terms {
            let l = term.degree;
            let c = term.weight * harmonic_factor(l);
            for (k, t) in term.tensors.iter().enumerate() {
                let s = y[harmonic_index(l, k as i32 - l as i32)];
                if s != 0.0 {
                    out += t * (c * s);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::voigt_index;
    use crate::model::voigt_from_coords;

    #[test]
    fn table_is_orthonormal() {
        let all: Vec<&Rank4Tensor> = basis_tensor_table().families.iter().flatten().collect();
        assert_eq!(all.len(), 21);
        for (a, x) in all.iter().enumerate() {
            for (b, y) in all.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((x.dot(y) - want).abs() < 1e-14, "pair ({a}, {b})");
            }
        }
    }

    #[test]
    fn table_tensors_have_pair_symmetries() {
        for t in basis_tensor_table().families.iter().flatten() {
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for m in 0..3 {
                            let v = t.get(i, j, l, m);
                            assert!((v - t.get(j, i, l, m)).abs() < 1e-15);
                            assert!((v - t.get(l, m, i, j)).abs() < 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn family_weights_are_projections_of_the_pole_density() {
        // Independent route: the weight of family n is the Frobenius
        // projection of the pole density onto the t = 0 member.
        let table = basis_tensor_table();
        for u in [[1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4, 0.2]] {
            let f = Rank4Tensor::from_voigt(&voigt_from_coords(&u));
            let w = tensor_density_coefficients(&u);
            for n in 0..5 {
                let l = TENSOR_DEGREES[n];
                let proj = table.families[n][l].dot(&f);
                assert!((proj - w[n]).abs() < 1e-14, "u = {u:?}, family {}", n + 1);
            }
        }
    }

    #[test]
    fn tensor_density_at_pole_is_the_voigt_matrix() {
        let u = [0.15, 0.25, 0.2, 0.4, -0.1];
        let f = DirectionalDensity::tensor(&u).at(&AngularPair::pole());
        let v = voigt_from_coords(&u);
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        let want = v[(voigt_index(i, j), voigt_index(l, m))];
                        assert!((f[(i * 3 + j, l * 3 + m)] - want).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn vector_density_matches_projector_form() {
        let p = AngularPair::new(0.7, 2.9).unwrap();
        let n = p.unit_vector();
        let (u1, u2) = (0.35, 0.65);
        let want = (Mat3::identity() - n * n.transpose()) * (u1 / 2.0) + n * n.transpose() * u2;
        let got = DirectionalDensity::vector(u1, u2).at(&p);
        for i in 0..3 {
            for j in 0..3 {
                assert!((got[(i, j)] - want[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn m_tensor_is_table_rotated_to_direction() {
        let p = AngularPair::new(1.2, 0.5).unwrap();
        let k = p.rotation();
        for n in 1..=5 {
            let l = TENSOR_DEGREES[n - 1];
            let want = basis_tensor_table().families[n - 1][l].rotated(&k);
            assert!(m_tensor(n, &p).max_abs_diff(&want) < 1e-14, "family {n}");
        }
    }
}
