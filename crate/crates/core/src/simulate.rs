//! Gaussian synthesis of field realizations from truncated harmonic
//! expansions.
//!
//! Each atom of each spectral measure contributes an independent block of
//! mode coefficients `z = sqrt(mass) L zeta`, where `zeta` is standard
//! normal and `L` is the Cholesky factor of that family's mode covariance.
//! The field at `(r, theta, phi)` is then
//! `mean + 2 sqrt(pi) sum j_l(lambda r) S_lm(theta, phi) z`.
//!
//! Every atom draws from its own ChaCha stream keyed by the run seed, the
//! realization, the family and the atom, so the output does not depend on
//! how the work is scheduled.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bmodes::{gram_factor, CholeskyFactor, FieldKind};
use crate::error::{domain, require_valid, Result};
use crate::geometry::{AngularPair, Vec3, VOIGT_PAIRS};
use crate::model::{Atom, DirectionalDensity, ScalarModel, SpectralMeasure, TensorModel, VectorModel};
use crate::specfun::quadrature::gauss_legendre;
use crate::specfun::{real_harmonics, sph_len, spherical_bessel_array};

/// Truncation degree used when none is given.
pub const DEFAULT_LMAX: usize = 12;

/// A point in spherical coordinates `(r, theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl GridPoint {
    pub fn position(&self) -> Result<Vec3> {
        Ok(AngularPair::new(self.theta, self.phi)?.unit_vector() * self.r)
    }

    pub fn from_position(x: &Vec3) -> Result<Self> {
        let r = x.norm();
        if r == 0.0 {
            return Ok(Self { r: 0.0, theta: 0.0, phi: 0.0 });
        }
        let p = AngularPair::from_vector(x)?;
        Ok(Self { r, theta: p.theta(), phi: p.phi() })
    }
}

/// The points at which a realization is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridSpec {
    pub points: Vec<GridPoint>,
}

impl GridSpec {
    pub fn new(points: Vec<GridPoint>) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            if !(p.r >= 0.0) || !p.r.is_finite() {
                return domain(format!("grid point {k}: radius {} must be finite and >= 0", p.r));
            }
            AngularPair::new(p.theta, p.phi).map_err(|e| crate::Error::Domain(format!("grid point {k}: {e}")))?;
        }
        Ok(Self { points })
    }

    pub fn from_positions(xs: &[Vec3]) -> Result<Self> {
        Self::new(xs.iter().map(GridPoint::from_position).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn r_max(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.r))
    }
}

/// One sampled field on a grid. Values are stored point by point with
/// one, three or nine components; tensor values are full symmetric
/// matrices in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub kind: FieldKind,
    pub seed: u64,
    pub realization: u64,
    pub lmax: usize,
    pub values: Vec<f64>,
}

impl FieldRealization {
    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.components()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// All components at point `p`.
    pub fn at(&self, p: usize) -> &[f64] {
        let c = self.components();
        &self.values[p * c..(p + 1) * c]
    }

    /// Output columns at point `p`: the value, the vector, or the six
    /// independent tensor entries in Voigt order.
    pub fn columns(&self, p: usize) -> Vec<f64> {
        let v = self.at(p);
        match self.kind {
            FieldKind::Tensor => VOIGT_PAIRS.iter().map(|&(i, j)| v[i * 3 + j]).collect(),
            _ => v.to_vec(),
        }
    }
}

/// A spectral density given either as atoms or as samples of a
/// continuous density on increasing wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralInput {
    Atomic(SpectralMeasure),
    Tabulated { lambda: Vec<f64>, density: Vec<f64> },
}

/// Replace a density by `n_atoms` Gauss-Legendre atoms on its support.
///
/// The tabulation is read as a piecewise-linear function. Atom masses are
/// the quadrature weights times the interpolated density, rescaled so the
/// total equals the exact integral of the interpolant. Atomic input is
/// returned unchanged.
pub fn discretize(input: &SpectralInput, n_atoms: usize) -> Result<SpectralMeasure> {
    let (lambda, density) = match input {
        SpectralInput::Atomic(m) => return Ok(m.clone()),
        SpectralInput::Tabulated { lambda, density } => (lambda, density),
    };
    if lambda.len() != density.len() || lambda.len() < 2 {
        return domain("a tabulated density needs at least two (lambda, value) pairs of equal length");
    }
    if n_atoms == 0 {
        return domain("at least one atom is required");
    }
    if !(lambda[0] >= 0.0) {
        return domain(format!("wavenumber {} is negative", lambda[0]));
    }
    for w in lambda.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return domain("tabulated wavenumbers must be finite and strictly increasing");
        }
    }
    if let Some(bad) = density.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return domain(format!("density value {bad} is negative or not finite"));
    }
    let exact: f64 = lambda.windows(2).zip(density.windows(2)).map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])).sum();
    if exact == 0.0 {
        return Ok(SpectralMeasure::empty());
    }
    let interp = |x: f64| -> f64 {
        let k = lambda.partition_point(|&l| l <= x).clamp(1, lambda.len() - 1);
        let t = (x - lambda[k - 1]) / (lambda[k] - lambda[k - 1]);
        density[k - 1] + t * (density[k] - density[k - 1])
    };
    let (a, b) = (lambda[0], *lambda.last().unwrap());
    let (nodes, weights) = gauss_legendre(n_atoms);
    let half = 0.5 * (b - a);
    let mut atoms: Vec<Atom> = nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| {
            let l = a + half * (x + 1.0);
            Atom::new(l, half * w * interp(l))
        })
        .collect();
    let approx: f64 = atoms.iter().map(|a| a.mass).sum();
    if approx > 0.0 {
        let s = exact / approx;
        atoms.iter_mut().for_each(|a| a.mass *= s);
    }
    atoms.retain(|a| a.mass > 0.0);
    atoms.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    Ok(SpectralMeasure::new(atoms))
}

/// `sum_{l > lmax} (2l + 1) max_k j_l(lambda_k r_max)^2`, a computable
/// estimate of the variance left out by the truncation.
pub fn tail_bound(lambdas: &[f64], r_max: f64, lmax: usize) -> Result<f64> {
    let top = lmax + 60;
    let mut worst = vec![0.0f64; top + 1];
    for &l in lambdas {
        let j = spherical_bessel_array(top, l * r_max)?;
        for (w, v) in worst.iter_mut().zip(&j) {
            *w = w.max(v * v);
        }
    }
    Ok((lmax + 1..=top).map(|l| (2 * l + 1) as f64 * worst[l]).sum())
}

/// SplitMix64 finalizer, used to derive independent stream keys.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, realization: u64, family: u64, atom: u64) -> ChaCha12Rng {
    let key = mix(mix(mix(mix(seed) ^ realization) ^ family) ^ atom);
    ChaCha12Rng::seed_from_u64(key)
}

/// One atom of one family, ready to draw coefficients.
#[derive(Debug, Clone)]
struct AtomPlan {
    family: u64,
    index: u64,
    lambda: f64,
    scale: f64,
    /// `None` means independent modes (the scalar field).
    factor: Option<Arc<CholeskyFactor>>,
}

/// A model prepared for sampling: the Cholesky factors are computed once
/// and reused for every realization.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: FieldKind,
    lmax: usize,
    mean: f64,
    atoms: Vec<AtomPlan>,
}

fn factor(kind: FieldKind, density: &DirectionalDensity, lmax: usize) -> Result<Arc<CholeskyFactor>> {
    Ok(Arc::new(gram_factor(kind, density, lmax)?))
}

fn plans(family: u64, measure: &SpectralMeasure, factor: Option<Arc<CholeskyFactor>>) -> Vec<AtomPlan> {
    measure
        .atoms
        .iter()
        .enumerate()
        .map(|(k, a)| AtomPlan {
            family,
            index: k as u64,
            lambda: a.lambda,
            scale: a.mass.sqrt(),
            factor: factor.clone(),
        })
        .collect()
}

impl Sampler {
    pub fn scalar(measure: &SpectralMeasure, mean: f64, lmax: usize) -> Result<Self> {
        let model = ScalarModel { mean, phi: measure.clone() };
        require_valid(model.validate())?;
        // Scalar modes are uncorrelated with unit variance, so no factor.
        Ok(Self { kind: FieldKind::Scalar, lmax, mean, atoms: plans(0, measure, None) })
    }

    pub fn vector(model: &VectorModel, lmax: usize) -> Result<Self> {
        require_valid(model.validate())?;
        let mut atoms = Vec::new();
        for (n, m) in [(1u64, &model.phi1), (2, &model.phi2)] {
            if !m.atoms.is_empty() {
                let f = factor(FieldKind::Vector, &DirectionalDensity::vector_family(n as usize), lmax)?;
                atoms.extend(plans(n, m, Some(f)));
            }
        }
        Ok(Self { kind: FieldKind::Vector, lmax, mean: 0.0, atoms })
    }

    pub fn tensor(model: &TensorModel, lmax: usize) -> Result<Self> {
        require_valid(model.validate())?;
        let mut atoms = Vec::new();
        for (n, m) in [(1u64, &model.phi1), (2, &model.phi2)] {
            if !m.atoms.is_empty() {
                let f = factor(FieldKind::Tensor, &DirectionalDensity::tensor_family(n as usize), lmax)?;
                atoms.extend(plans(n, m, Some(f)));
            }
        }
        if !model.phi3.atoms.is_empty() {
            for (k, a) in model.phi3.atoms.iter().enumerate() {
                let density = DirectionalDensity::tensor_shape(model.shape_of(k));
                atoms.push(AtomPlan {
                    family: 3,
                    index: k as u64,
                    lambda: a.lambda,
                    scale: a.mass.sqrt(),
                    factor: Some(factor(FieldKind::Tensor, &density, lmax)?),
                });
            }
        }
        Ok(Self { kind: FieldKind::Tensor, lmax, mean: model.mean, atoms })
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Truncation diagnostic for this model on `grid`.
    pub fn tail_bound(&self, grid: &GridSpec) -> Result<f64> {
        let l: Vec<f64> = self.atoms.iter().map(|a| a.lambda).collect();
        tail_bound(&l, grid.r_max(), self.lmax)
    }

    fn draw(&self, plan: &AtomPlan, seed: u64, realization: u64) -> Vec<f64> {
        let dim = self.kind.components() * sph_len(self.lmax);
        let mut rng = stream(seed, realization, plan.family, plan.index);
        let zeta: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut z = match &plan.factor {
            Some(f) => f.apply(&zeta),
            None => zeta,
        };
        z.iter_mut().for_each(|x| *x *= plan.scale);
        z
    }

    /// One realization, identified by `(seed, realization)`.
    pub fn sample(&self, grid: &PreparedGrid, seed: u64, realization: u64) -> Result<FieldRealization> {
        if grid.lmax != self.lmax {
            return domain("grid was prepared for a different truncation degree");
        }
        let c = self.kind.components();
        let n = grid.radii.len();
        let mut values = vec![0.0; n * c];
        let norm = 2.0 * std::f64::consts::PI.sqrt();
        for plan in &self.atoms {
            let z = self.draw(plan, seed, realization);
            let mut coeff = vec![0.0; c];
            for p in 0..n {
                let j = spherical_bessel_array(self.lmax, plan.lambda * grid.radii[p])?;
                let s = &grid.harmonics[p];
                coeff.iter_mut().for_each(|x| *x = 0.0);
                for (h, sv) in s.iter().enumerate() {
                    let w = j[grid.degree[h]] * sv;
                    if w == 0.0 {
                        continue;
                    }
                    for (a, x) in coeff.iter_mut().enumerate() {
                        *x += w * z[h * c + a];
                    }
                }
                for (a, x) in coeff.iter().enumerate() {
                    values[p * c + a] += norm * x;
                }
            }
        }
        for p in 0..n {
            let v = &mut values[p * c..(p + 1) * c];
            match self.kind {
                FieldKind::Scalar => v[0] += self.mean,
                FieldKind::Vector => {}
                FieldKind::Tensor => {
                    for i in 0..3 {
                        v[i * 4] += self.mean;
                        for j in i + 1..3 {
                            let s = 0.5 * (v[i * 3 + j] + v[j * 3 + i]);
                            v[i * 3 + j] = s;
                            v[j * 3 + i] = s;
                        }
                    }
                }
            }
        }
        Ok(FieldRealization { kind: self.kind, seed, realization, lmax: self.lmax, values })
    }

    /// Realizations `0..count`, computed in parallel. The result does not
    /// depend on the number of threads.
    pub fn sample_many(&self, grid: &PreparedGrid, seed: u64, count: usize) -> Result<Vec<FieldRealization>> {
        (0..count as u64).into_par_iter().map(|k| self.sample(grid, seed, k)).collect()
    }
}

/// A grid with its harmonics evaluated once for a given truncation degree.
#[derive(Debug, Clone)]
pub struct PreparedGrid {
    lmax: usize,
    radii: Vec<f64>,
    harmonics: Vec<Vec<f64>>,
    degree: Vec<usize>,
}

impl PreparedGrid {
    pub fn new(grid: &GridSpec, lmax: usize) -> Result<Self> {
        let mut harmonics = Vec::with_capacity(grid.len());
        for p in &grid.points {
            harmonics.push(real_harmonics(lmax, &AngularPair::new(p.theta, p.phi)?));
        }
        let degree = (0..sph_len(lmax)).map(|h| (h as f64).sqrt().floor() as usize).collect();
        Ok(Self { lmax, radii: grid.points.iter().map(|p| p.r).collect(), harmonics, degree })
    }
}

/// One scalar realization with mean `mean`.
pub fn sample_scalar(
    measure: &SpectralMeasure,
    mean: f64,
    grid: &GridSpec,
    seed: u64,
    lmax: usize,
) -> Result<FieldRealization> {
    Sampler::scalar(measure, mean, lmax)?.sample(&PreparedGrid::new(grid, lmax)?, seed, 0)
}

/// One centred vector realization.
pub fn sample_vector(model: &VectorModel, grid: &GridSpec, seed: u64, lmax: usize) -> Result<FieldRealization> {
    Sampler::vector(model, lmax)?.sample(&PreparedGrid::new(grid, lmax)?, seed, 0)
}

/// One tensor realization with mean `mean * delta`.
pub fn sample_tensor(model: &TensorModel, grid: &GridSpec, seed: u64, lmax: usize) -> Result<FieldRealization> {
    Sampler::tensor(model, lmax)?.sample(&PreparedGrid::new(grid, lmax)?, seed, 0)
}
