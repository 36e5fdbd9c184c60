//! Spectral models of isotropic fields and their validation.
//!
//! Every model is a short list of discrete measures on `[0, inf)`. Each
//! measure is paired with a fixed directional density (an extreme point of
//! the set of admissible spectral densities), so the correlation is a sum
//! over atoms of closed-form kernels.

mod density;
mod fmatrix;

pub use density::{
    basis_tensor_table, m_tensor, m_tensor_rank2, tensor_density_coefficients, BasisTensorTable, DensityTerm,
    DirectionalDensity, TENSOR_DEGREES,
};
pub use fmatrix::{
    coords_from_voigt, f_matrix_tensor, f_matrix_vector, u_from_v, voigt_from_coords, SimplexCoords, EXTREME_D1,
    EXTREME_D2,
};

use std::fmt;

/// Relative tolerance for the balance conditions on atoms at the origin.
pub const BALANCE_TOL: f64 = 1e-9;
/// Slack allowed on the boundary of the elliptic region.
pub const ELLIPSE_TOL: f64 = 1e-12;

/// A point mass of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub lambda: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(lambda: f64, mass: f64) -> Self {
        Self { lambda, mass }
    }
}

/// A finite discrete measure on the wavenumber half-line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|a| a.lambda == 0.0).map(|a| a.mass).sum()
    }

    pub fn max_lambda(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(a.lambda))
    }

    fn check(&self, name: &str, out: &mut Vec<Violation>) {
        for (k, a) in self.atoms.iter().enumerate() {
            if !a.lambda.is_finite() || a.lambda < 0.0 {
                out.push(Violation::new(
                    "wavenumber domain",
                    format!("{name} atom {k}: wavenumber {} must be finite and >= 0", a.lambda),
                ));
            }
            if !a.mass.is_finite() || a.mass <= 0.0 {
                out.push(Violation::new(
                    "positive mass",
                    format!("{name} atom {k}: mass {} must be finite and > 0", a.mass),
                ));
            }
            if k > 0 && !(a.lambda > self.atoms[k - 1].lambda) {
                out.push(Violation::new(
                    "ordered atoms",
                    format!("{name} atom {k}: wavenumbers must be strictly increasing"),
                ));
            }
        }
    }
}

/// Shape of the rank-2 extreme density attached to the third tensor
/// measure. Admissible shapes fill the region `4(v1 - 1/2)^2 + 8 v2^2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsePoint {
    pub v1: f64,
    pub v2: f64,
}

impl EllipsePoint {
    pub fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }

    /// `4(v1 - 1/2)^2 + 8 v2^2`; at most one inside the region.
    pub fn radius(&self) -> f64 {
        4.0 * (self.v1 - 0.5).powi(2) + 8.0 * self.v2 * self.v2
    }

    pub fn is_admissible(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.radius() <= 1.0 + ELLIPSE_TOL
    }
}

/// One violated constraint, named and explained.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

impl Violation {
    pub fn new(constraint: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { constraint: constraint.into(), detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

/// A homogeneous isotropic scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarModel {
    pub mean: f64,
    pub phi: SpectralMeasure,
}

/// A centred homogeneous isotropic vector field. `phi1` carries the
/// transverse extreme density and `phi2` the longitudinal one.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorModel {
    pub phi1: SpectralMeasure,
    pub phi2: SpectralMeasure,
}

/// A homogeneous isotropic field of symmetric rank-2 tensors with mean
/// `mean * delta`. `shape[k]` belongs to atom `k` of `phi3`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorModel {
    pub mean: f64,
    pub phi1: SpectralMeasure,
    pub phi2: SpectralMeasure,
    pub phi3: SpectralMeasure,
    pub shape: Vec<EllipsePoint>,
}

/// The tensor model restricted to densities with `u5 = 0`: four measures
/// whose shapes are pinned to `(1, 0)` and `(0, 0)` for the last two.
#[derive(Debug, Clone, PartialEq)]
pub struct TetraModel {
    pub mean: f64,
    pub phi: [SpectralMeasure; 4],
}

/// Any of the supported models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Scalar(ScalarModel),
    Vector(VectorModel),
    Tensor(TensorModel),
}

impl Model {
    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Model::Scalar(m) => m.validate(),
            Model::Vector(m) => m.validate(),
            Model::Tensor(m) => m.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Scalar(_) => "scalar",
            Model::Vector(_) => "vector",
            Model::Tensor(_) => "tensor",
        }
    }

    /// Largest wavenumber carrying mass.
    pub fn max_lambda(&self) -> f64 {
        self.measures().iter().fold(0.0, |m, s| m.max(s.max_lambda()))
    }

    pub fn measures(&self) -> Vec<&SpectralMeasure> {
        match self {
            Model::Scalar(m) => vec![&m.phi],
            Model::Vector(m) => vec![&m.phi1, &m.phi2],
            Model::Tensor(m) => vec![&m.phi1, &m.phi2, &m.phi3],
        }
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= BALANCE_TOL * scale.max(f64::MIN_POSITIVE)
}

impl ScalarModel {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.mean.is_finite() {
            out.push(Violation::new("finite mean", format!("mean {} is not finite", self.mean)));
        }
        self.phi.check("phi", &mut out);
        out
    }
}

impl VectorModel {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        self.phi1.check("phi1", &mut out);
        self.phi2.check("phi2", &mut out);
        // At the origin the density must be isotropic, which forces the
        // transverse mass to be twice the longitudinal one.
        let (a, b) = (self.phi1.mass_at_zero(), self.phi2.mass_at_zero());
        if !close(a, 2.0 * b, a.max(2.0 * b)) {
            out.push(Violation::new(
                "atom balance at zero",
                format!("phi1({{0}}) = {a} must equal 2 phi2({{0}}) = {}", 2.0 * b),
            ));
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.phi1.total_mass() + self.phi2.total_mass()
    }
}

impl TensorModel {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.mean.is_finite() {
            out.push(Violation::new("finite mean", format!("mean {} is not finite", self.mean)));
        }
        self.phi1.check("phi1", &mut out);
        self.phi2.check("phi2", &mut out);
        self.phi3.check("phi3", &mut out);
        if self.shape.len() != self.phi3.atoms.len() {
            out.push(Violation::new(
                "shape per atom",
                format!("phi3 has {} atoms but {} shape points were given", self.phi3.atoms.len(), self.shape.len()),
            ));
        }
        for (k, v) in self.shape.iter().enumerate() {
            if !v.is_admissible() {
                out.push(Violation::new(
                    "elliptic region",
                    format!(
                        "phi3 atom {k}: 4(v1 - 1/2)^2 + 8 v2^2 = {} exceeds 1 at v = ({}, {})",
                        v.radius(),
                        v.v1,
                        v.v2
                    ),
                ));
            }
        }
        let z = [self.phi1.mass_at_zero(), self.phi2.mass_at_zero(), self.phi3.mass_at_zero()];
        let total: f64 = z.iter().sum();
        if total > 0.0 {
            if z[2] < 2.0 / 7.0 * total * (1.0 - BALANCE_TOL) {
                out.push(Violation::new(
                    "atom balance at zero",
                    format!("phi3({{0}}) = {} is below 2/7 of the total mass at zero {total}", z[2]),
                ));
            }
            if !close(1.5 * z[0], z[1], total) {
                out.push(Violation::new(
                    "atom balance at zero",
                    format!("phi1({{0}}) : phi2({{0}}) must be 1 : 3/2, got {} : {}", z[0], z[1]),
                ));
            }
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.phi1.total_mass() + self.phi2.total_mass() + self.phi3.total_mass()
    }

    /// Shape attached to `phi3` atom `k`.
    pub fn shape_of(&self, k: usize) -> EllipsePoint {
        self.shape[k]
    }
}

impl TetraModel {
    /// The equivalent three-measure model. Atoms of the last two measures
    /// at a common wavenumber merge into one atom whose shape is the
    /// mass-weighted average; everything the model determines is affine
    /// in the shape, so the merge changes nothing.
    pub fn to_tensor_model(&self) -> TensorModel {
        let mut merged: Vec<(f64, f64, f64)> = Vec::new(); // (lambda, mass, mass * v1)
        for (measure, v1) in [(&self.phi[2], 1.0), (&self.phi[3], 0.0)] {
            for a in &measure.atoms {
                match merged.iter_mut().find(|e| e.0 == a.lambda) {
                    Some(e) => {
                        e.1 += a.mass;
                        e.2 += a.mass * v1;
                    }
                    None => merged.push((a.lambda, a.mass, a.mass * v1)),
                }
            }
        }
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        TensorModel {
            mean: self.mean,
            phi1: self.phi[0].clone(),
            phi2: self.phi[1].clone(),
            phi3: SpectralMeasure::new(merged.iter().map(|e| Atom::new(e.0, e.1)).collect()),
            shape: merged.iter().map(|e| EllipsePoint::new(e.2 / e.1, 0.0)).collect(),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, m) in self.phi.iter().enumerate() {
            m.check(&format!("phi{}", k + 1), &mut out);
        }
        if out.is_empty() {
            out = self.to_tensor_model().validate();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(atoms: &[(f64, f64)]) -> SpectralMeasure {
        SpectralMeasure::new(atoms.iter().map(|&(l, m)| Atom::new(l, m)).collect())
    }

    #[test]
    fn vector_balance_at_zero() {
        let ok = VectorModel { phi1: measure(&[(0.0, 0.4)]), phi2: measure(&[(0.0, 0.2)]) };
        assert!(ok.validate().is_empty());
        let bad = VectorModel { phi1: measure(&[(0.0, 0.4)]), phi2: measure(&[(0.0, 0.3)]) };
        let v = bad.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "atom balance at zero");
    }

    #[test]
    fn measure_rules() {
        let m = VectorModel { phi1: measure(&[(1.0, 0.5), (1.0, 0.1), (-2.0, 0.0)]), phi2: SpectralMeasure::empty() };
        let names: Vec<_> = m.validate().into_iter().map(|v| v.constraint).collect();
        assert!(names.contains(&"ordered atoms".to_string()));
        assert!(names.contains(&"wavenumber domain".to_string()));
        assert!(names.contains(&"positive mass".to_string()));
    }

    #[test]
    fn tensor_shape_outside_ellipse_is_reported() {
        let m = TensorModel {
            mean: 0.0,
            phi1: SpectralMeasure::empty(),
            phi2: SpectralMeasure::empty(),
            phi3: measure(&[(1.0, 1.0)]),
            shape: vec![EllipsePoint::new(0.5, 0.4)],
        };
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "elliptic region");
        assert!(v[0].detail.contains("exceeds 1"));
    }

    #[test]
    fn tensor_balance_at_zero() {
        let base = |p1: f64, p2: f64, p3: f64| TensorModel {
            mean: 1.0,
            phi1: measure(&[(0.0, p1)]),
            phi2: measure(&[(0.0, p2)]),
            phi3: measure(&[(0.0, p3)]),
            shape: vec![EllipsePoint::new(0.5, 0.0)],
        };
        assert!(base(0.1, 0.15, 0.25).validate().is_empty());
        // Exactly 2/7 of the total on phi3 is still admissible.
        assert!(base(0.2, 0.3, 0.2).validate().is_empty());
        assert!(!base(0.2, 0.3, 0.1).validate().is_empty());
        assert!(!base(0.1, 0.2, 0.25).validate().is_empty());
    }

    #[test]
    fn tetra_merge_keeps_shape_weighted_mass() {
        let t = TetraModel {
            mean: 0.5,
            phi: [
                SpectralMeasure::empty(),
                SpectralMeasure::empty(),
                measure(&[(1.0, 0.3), (2.0, 0.1)]),
                measure(&[(1.0, 0.1)]),
            ],
        };
        let m = t.to_tensor_model();
        assert_eq!(m.phi3.atoms.len(), 2);
        assert!((m.phi3.atoms[0].mass - 0.4).abs() < 1e-15);
        assert!((m.shape[0].v1 - 0.75).abs() < 1e-15);
        assert_eq!(m.shape[1].v1, 1.0);
        assert!(m.validate().is_empty());
    }
}
