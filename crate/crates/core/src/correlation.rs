//! Closed-form two-point correlations of isotropic fields.
//!
//! Every correlation is a finite sum over the atoms of the model. Rank-2
//! fields use the five isotropic rank-4 tensors `L^1..L^5` of the unit
//! separation, weighted by the kernels tabulated in [`NTable`].

use crate::error::{domain, require_valid, Result};
use crate::geometry::{AngularPair, Mat3, Rank4Tensor, Vec3};
use crate::model::{EllipsePoint, ScalarModel, SpectralMeasure, TensorModel, TetraModel, VectorModel};
use crate::specfun::spherical_bessel_array;

pub use crate::model::m_tensor as m_basis;

/// Decay exponents of the Lomakin functions, one per `L^q`.
pub const LOMAKIN_POWERS: [i32; 5] = [0, 0, 2, 2, 4];

/// A separation vector `x - y`, in axis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    xi: Vec3,
}

impl Separation {
    pub fn new(xi: Vec3) -> Result<Self> {
        if xi.iter().any(|x| !x.is_finite()) {
            return domain("separation must be finite");
        }
        Ok(Self { xi })
    }

    pub fn from_slice(xi: [f64; 3]) -> Result<Self> {
        Self::new(Vec3::new(xi[0], xi[1], xi[2]))
    }

    pub fn vector(&self) -> Vec3 {
        self.xi
    }

    pub fn rho(&self) -> f64 {
        self.xi.norm()
    }

    /// Unit direction, or `None` at zero separation.
    pub fn unit(&self) -> Option<Vec3> {
        let r = self.rho();
        (r > 0.0).then(|| self.xi / r)
    }

    pub fn direction(&self) -> Option<AngularPair> {
        self.unit().and_then(|u| AngularPair::from_vector(&u).ok())
    }
}

/// The isotropic basis tensor `L^q` of the separation direction.
pub fn l_basis(q: usize, xi: &Separation) -> Result<Rank4Tensor> {
    if !(1..=5).contains(&q) {
        return domain(format!("basis index {q} outside 1..=5"));
    }
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    if q <= 2 {
        return Ok(match q {
            1 => Rank4Tensor::from_fn(|i, j, l, m| d(i, j) * d(l, m)),
            _ => Rank4Tensor::from_fn(|i, j, l, m| d(i, l) * d(j, m) + d(i, m) * d(j, l)),
        });
    }
    let n = match xi.unit() {
        Some(n) => n,
        None => return domain(format!("L^{q} is undefined at zero separation")),
    };
    Ok(match q {
        3 => Rank4Tensor::from_fn(|i, j, l, m| {
            n[j] * n[l] * d(i, m) + n[i] * n[m] * d(j, l) + n[i] * n[l] * d(j, m) + n[j] * n[m] * d(i, l)
        }),
        4 => Rank4Tensor::from_fn(|i, j, l, m| n[i] * n[j] * d(l, m) + n[l] * n[m] * d(i, j)),
        _ => Rank4Tensor::from_fn(|i, j, l, m| n[i] * n[j] * n[l] * n[m]),
    })
}

/// Coefficients expressing `M^n` in the `L` basis, row `n - 1`.
pub fn m_to_l_coefficients() -> [[f64; 5]; 5] {
    let s5 = 5f64.sqrt();
    let s14 = 14f64.sqrt();
    let s70 = 70f64.sqrt();
    [
        [1.0 / 3.0, 0.0, 0.0, 0.0, 0.0],
        [-1.0 / (3.0 * s5), 1.0 / (2.0 * s5), 0.0, 0.0, 0.0],
        [-1.0 / 3.0, 0.0, 0.0, 0.5, 0.0],
        [2.0 * 2f64.sqrt() / (3.0 * 7f64.sqrt()), -1.0 / s14, 3.0 / (2.0 * s14), -(2.0f64 / 7.0).sqrt(), 0.0],
        [
            1.0 / (2.0 * s70),
            1.0 / (2.0 * s70),
            -s5 / (2.0 * s14),
            -s5 / (2.0 * s14),
            35f64.sqrt() / (2.0 * 2f64.sqrt()),
        ],
    ]
}

/// Kernel coefficients of the tensor correlation.
///
/// `rows[n][q][k]` holds the coefficient of `j_{2k}(lambda rho)` in the
/// kernel of family `n + 1` against `L^{q+1}`, as an affine function of
/// the shape: `[constant, d/dv1, d/dv2]`. Families 1 and 2 do not depend
/// on the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NTable {
    pub rows: [[[[f64; 3]; 3]; 5]; 3],
}

impl Default for NTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl NTable {
    pub fn standard() -> Self {
        let c = |x: f64| [x, 0.0, 0.0];
        // a = 2 - v1 - 4 v2 recurs throughout the shape row.
        let a = [2.0, -1.0, -4.0];
        let sa = |s: f64| [a[0] * s, a[1] * s, a[2] * s];
        let z = [0.0; 3];
        Self {
            rows: [
                [
                    [c(-2.0 / 15.0), c(-4.0 / 21.0), c(-2.0 / 35.0)],
                    [c(1.0 / 5.0), c(1.0 / 7.0), c(-2.0 / 35.0)],
                    [z, c(-3.0 / 14.0), c(2.0 / 7.0)],
                    [z, c(2.0 / 7.0), c(2.0 / 7.0)],
                    [z, z, c(-2.0)],
                ],
                [
                    [c(-4.0 / 45.0), c(16.0 / 63.0), c(1.0 / 105.0)],
                    [c(2.0 / 15.0), c(-4.0 / 21.0), c(1.0 / 105.0)],
                    [z, c(2.0 / 7.0), c(-1.0 / 21.0)],
                    [z, c(-8.0 / 21.0), c(-1.0 / 21.0)],
                    [z, z, c(1.0 / 3.0)],
                ],
                [
                    [[1.0 / 15.0, 2.0 / 15.0, 8.0 / 15.0], [2.0 / 21.0, -8.0 / 21.0, 10.0 / 21.0], sa(1.0 / 70.0)],
                    [sa(1.0 / 30.0), sa(1.0 / 21.0), sa(1.0 / 70.0)],
                    [z, sa(-1.0 / 14.0), sa(-1.0 / 14.0)],
                    [z, [-1.0 / 7.0, 4.0 / 7.0, -5.0 / 7.0], sa(-1.0 / 14.0)],
                    [z, z, sa(0.5)],
                ],
            ],
        }
    }

    /// Coefficients of `(j0, j2, j4)` for family `n` in `1..=3`, basis `q` in `1..=5`.
    pub fn coefficients(&self, n: usize, q: usize, v: EllipsePoint) -> [f64; 3] {
        let row = &self.rows[n - 1][q - 1];
        std::array::from_fn(|k| row[k][0] + row[k][1] * v.v1 + row[k][2] * v.v2)
    }

    /// `N_nq(lambda, rho)` for all five `q` at once.
    pub fn kernels(&self, n: usize, lambda_rho: f64, v: EllipsePoint) -> Result<[f64; 5]> {
        let j = spherical_bessel_array(4, lambda_rho)?;
        Ok(std::array::from_fn(|q| {
            let c = self.coefficients(n, q + 1, v);
            c[0] * j[0] + c[1] * j[2] + c[2] * j[4]
        }))
    }
}

/// A single kernel `N_nq` of the standard table.
pub fn n_function(n: usize, q: usize, lambda_rho: f64, v: EllipsePoint) -> Result<f64> {
    if !(1..=3).contains(&n) || !(1..=5).contains(&q) {
        return domain(format!("kernel index ({n}, {q}) outside (1..=3, 1..=5)"));
    }
    Ok(NTable::standard().kernels(n, lambda_rho, v)?[q - 1])
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Correlation of a scalar field at distance `rho`.
pub fn scalar_correlation(model: &ScalarModel, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return domain(format!("distance {rho} must be finite and >= 0"));
    }
    require_valid(model.validate())?;
    Ok(model.phi.atoms.iter().map(|a| a.mass * sinc(a.lambda * rho)).sum())
}

/// Sums over atoms of `j0` and `j2` at `lambda rho`.
fn bessel_sums(measure: &SpectralMeasure, rho: f64) -> Result<(f64, f64)> {
    let mut s0 = 0.0;
    let mut s2 = 0.0;
    for a in &measure.atoms {
        let j = spherical_bessel_array(2, a.lambda * rho)?;
        s0 += a.mass * j[0];
        s2 += a.mass * j[2];
    }
    Ok((s0, s2))
}

/// Correlation matrix of a vector field at separation `xi`.
///
/// The transverse family contributes `(j0/3 - j2/6) I + (j2/2) n n^T` and
/// the longitudinal one `((j0 + j2)/3) I - j2 n n^T`, with `n` the unit
/// separation.
pub fn vector_correlation(model: &VectorModel, xi: &Separation) -> Result<Mat3> {
    require_valid(model.validate())?;
    let rho = xi.rho();
    let (a0, a2) = bessel_sums(&model.phi1, rho)?;
    let (b0, b2) = bessel_sums(&model.phi2, rho)?;
    let iso = a0 / 3.0 - a2 / 6.0 + (b0 + b2) / 3.0;
    let mut r = Mat3::identity() * iso;
    if let Some(n) = xi.unit() {
        r += n * n.transpose() * (a2 / 2.0 - b2);
    }
    Ok(r)
}

/// Robertson's pair `(A, B)` with `R_ij = A xi_i xi_j + B delta_ij`.
pub fn robertson_ab(model: &VectorModel, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return domain(format!("distance {rho} must be finite and > 0"));
    }
    require_valid(model.validate())?;
    let (a0, a2) = bessel_sums(&model.phi1, rho)?;
    let (b0, b2) = bessel_sums(&model.phi2, rho)?;
    let a = (a2 / 2.0 - b2) / (rho * rho);
    let b = a0 / 3.0 - a2 / 6.0 + (b0 + b2) / 3.0;
    Ok((a, b))
}

/// Sums `sum_n sum_atoms mass N_nq` for `q = 1..5`, the Lomakin
/// functions before the `rho^{-s}` scaling.
fn kernel_sums(model: &TensorModel, rho: f64, table: &NTable) -> Result<[f64; 5]> {
    let mut out = [0.0; 5];
    let neutral = EllipsePoint::new(0.5, 0.0);
    for (n, measure) in [(1, &model.phi1), (2, &model.phi2), (3, &model.phi3)] {
        for (k, a) in measure.atoms.iter().enumerate() {
            let v = if n == 3 { model.shape_of(k) } else { neutral };
            let kern = table.kernels(n, a.lambda * rho, v)?;
            for q in 0..5 {
                out[q] += a.mass * kern[q];
            }
        }
    }
    Ok(out)
}

/// Correlation tensor of a rank-2 field, using the given kernel table.
pub fn tensor_correlation_with(model: &TensorModel, xi: &Separation, table: &NTable) -> Result<Rank4Tensor> {
    require_valid(model.validate())?;
    let sums = kernel_sums(model, xi.rho(), table)?;
    let mut r = Rank4Tensor::zeros();
    // At zero separation only the constant tensors survive: every other
    // kernel carries j2 or j4, which vanish there.
    let top = if xi.unit().is_some() { 5 } else { 2 };
    for q in 1..=top {
        r.add_scaled(&l_basis(q, xi)?, sums[q - 1]);
    }
    Ok(r)
}

/// Correlation tensor of a rank-2 field at separation `xi`.
pub fn tensor_correlation(model: &TensorModel, xi: &Separation) -> Result<Rank4Tensor> {
    tensor_correlation_with(model, xi, &NTable::standard())
}

/// Correlation for the four-measure model with `u5 = 0`. The last two
/// families use the shape row at `(1, 0)` and `(0, 0)` respectively.
pub fn tensor_correlation_u5zero(model: &TetraModel, xi: &Separation) -> Result<Rank4Tensor> {
    require_valid(model.validate())?;
    let table = NTable::standard();
    let rho = xi.rho();
    let mut sums = [0.0; 5];
    let neutral = EllipsePoint::new(0.5, 0.0);
    let families = [(1, neutral), (2, neutral), (3, EllipsePoint::new(1.0, 0.0)), (3, EllipsePoint::new(0.0, 0.0))];
    for (measure, &(row, v)) in model.phi.iter().zip(families.iter()) {
        for a in &measure.atoms {
            let kern = table.kernels(row, a.lambda * rho, v)?;
            for q in 0..5 {
                sums[q] += a.mass * kern[q];
            }
        }
    }
    let mut r = Rank4Tensor::zeros();
    let top = if xi.unit().is_some() { 5 } else { 2 };
    for q in 1..=top {
        r.add_scaled(&l_basis(q, xi)?, sums[q - 1]);
    }
    Ok(r)
}

/// The Lomakin functions `a_1..a_5` at distance `rho > 0`:
/// `R = sum_q a_q rho^{s_q} L^q`, with `s = (0, 0, 2, 2, 4)`.
pub fn lomakin_coefficients(model: &TensorModel, rho: f64) -> Result<[f64; 5]> {
    if !(rho > 0.0) || !rho.is_finite() {
        return domain(format!("distance {rho} must be finite and > 0"));
    }
    require_valid(model.validate())?;
    let sums = kernel_sums(model, rho, &NTable::standard())?;
    Ok(std::array::from_fn(|q| sums[q] * rho.powi(-LOMAKIN_POWERS[q])))
}

/// A correlation of any supported rank.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationValue {
    Scalar(f64),
    Vector(Mat3),
    Tensor(Rank4Tensor),
}

impl CorrelationValue {
    /// All entries in a fixed order (row-major for matrices).
    pub fn entries(&self) -> Vec<f64> {
        match self {
            Self::Scalar(x) => vec![*x],
            Self::Vector(m) => (0..9).map(|k| m[(k / 3, k % 3)]).collect(),
            Self::Tensor(t) => t.data.to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// Largest entrywise difference; infinite if the ranks differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let (a, b) = (self.entries(), other.entries());
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// The value seen in a frame rotated by `k`.
    pub fn rotated(&self, k: &Mat3) -> Self {
        match self {
            Self::Scalar(x) => Self::Scalar(*x),
            Self::Vector(m) => Self::Vector(k * m * k.transpose()),
            Self::Tensor(t) => Self::Tensor(t.rotated(k)),
        }
    }
}

/// Closed-form correlation of any model at separation `xi`.
pub fn correlation(model: &crate::model::Model, xi: &Separation) -> Result<CorrelationValue> {
    use crate::model::Model;
    Ok(match model {
        Model::Scalar(m) => CorrelationValue::Scalar(scalar_correlation(m, xi.rho())?),
        Model::Vector(m) => CorrelationValue::Vector(vector_correlation(m, xi)?),
        Model::Tensor(m) => CorrelationValue::Tensor(tensor_correlation(m, xi)?),
    })
}
