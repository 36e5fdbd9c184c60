//! Independent checks: a quadrature evaluation of the spectral
//! representation, Monte Carlo covariance estimates with standard errors,
//! and a harness for rotation invariance.
//!
//! The quadrature oracle integrates `e^{i lambda (p, xi)} f(p)` over the
//! sphere with the density built directly from its harmonic expansion, so
//! it never touches the kernel table behind the closed forms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bmodes::FieldKind;
use crate::correlation::{correlation, CorrelationValue, Separation};
use crate::error::{domain, require_valid, Error, Result};
use crate::geometry::{random_orthogonal, AngularPair, Mat3, Rank4Tensor, Vec3};
use crate::model::{DirectionalDensity, EllipsePoint, Model, SpectralMeasure};
use crate::simulate::{FieldRealization, GridSpec, PreparedGrid, Sampler};
use crate::specfun::quadrature::SphereRule;
use crate::specfun::{real_harmonics, spherical_bessel_array};

/// Default truncation degree of the plane-wave expansion.
pub const PLANE_WAVE_DEGREE: usize = 20;
/// The two truncation degrees compared before the oracle is trusted.
pub const CROSS_CHECK_DEGREES: (usize, usize) = (24, 32);
/// Agreement required between the two degrees.
pub const CROSS_CHECK_TOL: f64 = 1e-8;
/// Largest imaginary part tolerated before the result is discarded.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// Tolerance for closed forms against the oracle.
pub const ORACLE_TOL: f64 = 1e-6;
/// Tolerance for the rotation check on exact evaluators.
pub const ISOTROPY_TOL: f64 = 1e-10;

/// Outcome of a comparison against a reference.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub check: String,
    pub max_abs_error: f64,
    /// Largest entry error at each evaluation point.
    pub errors: Vec<f64>,
    /// Quadrature orders (plane-wave degrees) used, empty when none.
    pub orders: Vec<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    fn new(check: &str, errors: Vec<f64>, orders: Vec<usize>, tolerance: f64) -> Self {
        let max_abs_error = errors.iter().fold(0.0f64, |m, e| m.max(*e));
        Self { check: check.to_string(), max_abs_error, errors, orders, tolerance, pass: max_abs_error <= tolerance }
    }
}

/// A density together with the atoms that use it.
struct Weighted {
    density: DirectionalDensity,
    atoms: Vec<(f64, f64)>,
}

fn weighted(density: DirectionalDensity, atoms: Vec<(f64, f64)>) -> Weighted {
    Weighted { density, atoms }
}

fn pairs(m: &SpectralMeasure) -> Vec<(f64, f64)> {
    m.atoms.iter().map(|a| (a.lambda, a.mass)).collect()
}

/// The model as a list of densities, each carrying its `(lambda, mass)`
/// atoms. The shape family is affine in `v`, so it splits into three
/// fixed densities with signed masses.
fn decompose(model: &Model) -> Vec<Weighted> {
    match model {
        Model::Scalar(s) => vec![weighted(DirectionalDensity::scalar(), pairs(&s.phi))],
        Model::Vector(v) => vec![
            weighted(DirectionalDensity::vector_family(1), pairs(&v.phi1)),
            weighted(DirectionalDensity::vector_family(2), pairs(&v.phi2)),
        ],
        Model::Tensor(t) => {
            let mut base = Vec::new();
            let mut e1 = Vec::new();
            let mut e2 = Vec::new();
            for (k, a) in t.phi3.atoms.iter().enumerate() {
                let v = t.shape_of(k);
                base.push((a.lambda, a.mass * (1.0 - v.v1 - v.v2)));
                e1.push((a.lambda, a.mass * v.v1));
                e2.push((a.lambda, a.mass * v.v2));
            }
            vec![
                weighted(DirectionalDensity::tensor_family(1), pairs(&t.phi1)),
                weighted(DirectionalDensity::tensor_family(2), pairs(&t.phi2)),
                weighted(DirectionalDensity::tensor_shape(EllipsePoint::new(0.0, 0.0)), base),
                weighted(DirectionalDensity::tensor_shape(EllipsePoint::new(1.0, 0.0)), e1),
                weighted(DirectionalDensity::tensor_shape(EllipsePoint::new(0.0, 1.0)), e2),
            ]
        }
    }
}

fn wrap(model: &Model, m: DMatrix<f64>) -> CorrelationValue {
    match model {
        Model::Scalar(_) => CorrelationValue::Scalar(m[(0, 0)]),
        Model::Vector(_) => CorrelationValue::Vector(Mat3::from_fn(|i, j| m[(i, j)])),
        Model::Tensor(_) => {
            let mut t = Rank4Tensor::zeros();
            for ij in 0..9 {
                for lm in 0..9 {
                    t.data[ij * 9 + lm] = m[(ij, lm)];
                }
            }
            CorrelationValue::Tensor(t)
        }
    }
}

/// Correlation at `xi` by quadrature over directions, with the plane wave
/// expanded in harmonics up to `degree`.
///
/// The sphere rule is exact to degree `2 (4 + degree)`, enough for the
/// product of a truncated plane wave and a density of degree four. The
/// imaginary part, which vanishes because every density is even, is
/// computed and checked.
pub fn quadrature_correlation(model: &Model, xi: &Separation, degree: usize) -> Result<CorrelationValue> {
    require_valid(model.validate())?;
    let rho = xi.rho();
    let arg_max = model.max_lambda() * rho;
    let tail = spherical_bessel_array(degree + 1, arg_max)?[degree + 1].abs() * (2 * degree + 3) as f64;
    if tail > 1e-9 {
        return domain(format!("lambda * rho = {arg_max} is too large for a plane-wave expansion of degree {degree}"));
    }
    let dir = xi.direction().unwrap_or_else(AngularPair::pole);
    let s_xi = real_harmonics(degree, &dir);
    let rule = SphereRule::new(2 * (4 + degree));
    let parts = decompose(model);
    let comps = parts[0].density.components;
    let four_pi = 4.0 * std::f64::consts::PI;

    let contributions: Vec<(DMatrix<f64>, DMatrix<f64>)> = rule
        .nodes()
        .par_iter()
        .map(|(p, w)| {
            let s_p = real_harmonics(degree, p);
            // Legendre-like sums per degree: sum_m S(p) S(xi_hat).
            let per_degree: Vec<f64> =
                (0..=degree).map(|l| (l * l..(l + 1) * (l + 1)).map(|h| s_p[h] * s_xi[h]).sum()).collect();
            let mut re = DMatrix::zeros(comps, comps);
            let mut im = DMatrix::zeros(comps, comps);
            for part in &parts {
                let (mut wr, mut wi) = (0.0, 0.0);
                for &(lambda, mass) in &part.atoms {
                    let j = spherical_bessel_array(degree, lambda * rho).expect("finite argument");
                    for l in 0..=degree {
                        let term = four_pi * j[l] * per_degree[l];
                        match l % 4 {
                            0 => wr += mass * term,
                            1 => wi += mass * term,
                            2 => wr -= mass * term,
                            _ => wi -= mass * term,
                        }
                    }
                }
                if wr == 0.0 && wi == 0.0 {
                    continue;
                }
                let f = part.density.at(p);
                re += &f * (w * wr);
                im += &f * (w * wi);
            }
            (re, im)
        })
        .collect();
    let mut re = DMatrix::zeros(comps, comps);
    let mut im = DMatrix::zeros(comps, comps);
    for (r, i) in contributions {
        re += r;
        im += i;
    }
    re /= four_pi;
    im /= four_pi;
    if im.amax() > IMAGINARY_TOL {
        return Err(Error::Consistency(format!("quadrature left an imaginary part of {:e}", im.amax())));
    }
    Ok(wrap(model, re))
}

/// Closed form against the quadrature oracle at each separation. The
/// oracle is first evaluated at two truncation degrees, which must agree.
pub fn oracle_report(model: &Model, separations: &[Separation], tolerance: f64) -> Result<OracleReport> {
    let (lo, hi) = CROSS_CHECK_DEGREES;
    let mut errors = Vec::with_capacity(separations.len());
    for xi in separations {
        let a = quadrature_correlation(model, xi, lo)?;
        let b = quadrature_correlation(model, xi, hi)?;
        let spread = a.max_abs_diff(&b);
        if spread > CROSS_CHECK_TOL {
            return Err(Error::Consistency(format!(
                "oracle degrees {lo} and {hi} differ by {spread:e} at rho = {}",
                xi.rho()
            )));
        }
        errors.push(correlation(model, xi)?.max_abs_diff(&b));
    }
    Ok(OracleReport::new("closed form vs quadrature", errors, vec![lo, hi], tolerance))
}

/// Random separations with `lambda_max * rho` at most `max_arg`.
pub fn random_separations(model: &Model, count: usize, max_arg: f64, seed: u64) -> Vec<Separation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lmax = model.max_lambda();
    let rho_max = if lmax > 0.0 { max_arg / lmax } else { max_arg };
    (0..count)
        .map(|_| {
            let dir = loop {
                let v =
                    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            };
            Separation::new(dir * rho_max * rng.random::<f64>()).expect("finite separation")
        })
        .collect()
}

/// Sample covariance and its jackknife standard error.
///
/// With two samples every leave-one-out estimate is undefined and the
/// standard error is infinite.
pub fn covariance_with_error(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n != y.len() {
        return domain("samples must have equal length");
    }
    if n < 2 {
        return domain(format!("{n} realizations; at least two are needed"));
    }
    let nf = n as f64;
    // Centre first so the running sums do not cancel.
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sx: f64 = dx.iter().sum();
    let sy: f64 = dy.iter().sum();
    let sxy: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    let estimate = (sxy - sx * sy / nf) / (nf - 1.0);
    if n == 2 {
        return Ok((estimate, f64::INFINITY));
    }
    let m = nf - 1.0;
    let loo: Vec<f64> =
        dx.iter().zip(&dy).map(|(a, b)| ((sxy - a * b) - (sx - a) * (sy - b) / m) / (m - 1.0)).collect();
    let mean = loo.iter().sum::<f64>() / nf;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (nf - 1.0) / nf;
    Ok((estimate, var.sqrt()))
}

/// Covariance between component `a` at point `p` and component `b` at
/// point `q` across realizations.
pub fn mc_covariance(
    realizations: &[FieldRealization],
    (p, q): (usize, usize),
    (a, b): (usize, usize),
) -> Result<(f64, f64)> {
    let x: Vec<f64> = realizations.iter().map(|r| r.at(p)[a]).collect();
    let y: Vec<f64> = realizations.iter().map(|r| r.at(q)[b]).collect();
    covariance_with_error(&x, &y)
}

/// Sample mean of component `a` at point `p` and its standard error.
pub fn mc_mean(realizations: &[FieldRealization], p: usize, a: usize) -> Result<(f64, f64)> {
    let n = realizations.len();
    if n < 2 {
        return domain(format!("{n} realizations; at least two are needed"));
    }
    let x: Vec<f64> = realizations.iter().map(|r| r.at(p)[a]).collect();
    let (var, _) = covariance_with_error(&x, &x)?;
    Ok((x.iter().sum::<f64>() / n as f64, (var / n as f64).sqrt()))
}

/// Jarque-Bera statistic and its asymptotic p-value.
pub fn jarque_bera(x: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 4 {
        return domain("the normality test needs at least four samples");
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let m = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / nf;
    let m2 = m(2);
    if m2 == 0.0 {
        return domain("constant sample");
    }
    let skew = m(3) / m2.powf(1.5);
    let kurt = m(4) / (m2 * m2);
    let jb = nf / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    // Chi-squared with two degrees of freedom.
    Ok((jb, (-jb / 2.0).exp()))
}

/// `max | R(k xi) - (U(k) x U(k)) R(xi) |` over the given rotations and
/// separations, with `U(k) = k` on vectors and its square on tensors.
pub fn isotropy_report_with<F>(evaluator: F, rotations: &[Mat3], separations: &[Separation]) -> Result<OracleReport>
where
    F: Fn(&Separation) -> Result<CorrelationValue> + Sync,
{
    let mut errors = Vec::with_capacity(rotations.len());
    for k in rotations {
        let mut worst = 0.0f64;
        for xi in separations {
            let moved = Separation::new(k * xi.vector())?;
            let lhs = evaluator(&moved)?;
            let rhs = evaluator(xi)?.rotated(k);
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        errors.push(worst);
    }
    Ok(OracleReport::new("rotation invariance", errors, vec![], ISOTROPY_TOL))
}

/// Rotation check with random orthogonal matrices (reflections included)
/// and random separations of length up to `rho_max`.
pub fn isotropy_report<F>(
    evaluator: F,
    n_rotations: usize,
    n_separations: usize,
    rho_max: f64,
    seed: u64,
) -> Result<OracleReport>
where
    F: Fn(&Separation) -> Result<CorrelationValue> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations: Vec<Mat3> = (0..n_rotations).map(|_| random_orthogonal(&mut rng, true)).collect();
    let unit = Model::Scalar(crate::model::ScalarModel {
        mean: 0.0,
        phi: SpectralMeasure::new(vec![crate::model::Atom::new(1.0, 1.0)]),
    });
    let seps = random_separations(&unit, n_separations, rho_max, rng.random());
    isotropy_report_with(evaluator, &rotations, &seps)
}

/// Densities must be symmetric, positive semidefinite and of unit trace
/// (Voigt trace in the frame of the direction, for tensors) everywhere. Returns the largest
/// deviation over `count` random directions.
pub fn density_report(model: &Model, count: usize, seed: u64) -> Result<OracleReport> {
    require_valid(model.validate())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut densities: Vec<DirectionalDensity> = Vec::new();
    match model {
        Model::Scalar(_) => densities.push(DirectionalDensity::scalar()),
        Model::Vector(_) => densities.extend((1..=2).map(DirectionalDensity::vector_family)),
        Model::Tensor(t) => {
            densities.extend((1..=2).map(DirectionalDensity::tensor_family));
            for k in 0..t.phi3.atoms.len() {
                densities.push(DirectionalDensity::tensor_shape(t.shape_of(k)));
            }
        }
    }
    let mut errors = Vec::with_capacity(count);
    for _ in 0..count {
        let p = AngularPair::new(
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..std::f64::consts::TAU),
        )?;
        let mut worst = 0.0f64;
        for d in &densities {
            let f = d.at(&p);
            let asym = (&f - f.transpose()).amax();
            let min_eig = f.clone().symmetric_eigenvalues().min();
            let trace = if f.nrows() == 9 {
                // The Voigt trace is not rotation invariant; take it in the
                // frame where p is the pole.
                let t = Rank4Tensor { data: std::array::from_fn(|k| f[(k / 9, k % 9)]) };
                let v = t.rotated(&p.rotation().transpose()).to_voigt();
                v.trace()
            } else {
                f.trace()
            };
            worst = worst.max(asym).max((-min_eig).max(0.0)).max((trace - 1.0).abs());
        }
        errors.push(worst);
    }
    Ok(OracleReport::new("density admissibility", errors, vec![], 1e-12))
}

/// Point pairs used by the Monte Carlo check: `count` pairs of points at
/// radius at most `r_max`, as one grid of `2 count` points.
pub fn mc_pairs(count: usize, r_max: f64, seed: u64) -> Result<GridSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(2 * count);
    for _ in 0..2 * count {
        let v = loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() <= 1.0 {
                break v;
            }
        };
        xs.push(v * r_max);
    }
    GridSpec::from_positions(&xs)
}

/// Component pair checked at point pair `k`; cycles through all pairs.
fn component_pair(kind: FieldKind, k: usize) -> (usize, usize) {
    let c = kind.components();
    // A stride coprime to c * c visits every pair before repeating.
    let idx = (k * 7) % (c * c);
    (idx / c, idx % c)
}

/// Sample `n` realizations on `count` random point pairs and compare the
/// sample covariances (and, for tensors, the sample mean at one point)
/// with the closed form. Errors are in units of the jackknife standard
/// error, and the tolerance is three of them. A Jarque-Bera test on one
/// component at each point of the first pair is reported separately, at
/// significance 0.01.
pub fn mc_report(model: &Model, n: usize, lmax: usize, count: usize, seed: u64) -> Result<Vec<OracleReport>> {
    require_valid(model.validate())?;
    let lam = model.max_lambda();
    let r_max = if lam > 0.0 { 1.0 / lam } else { 1.0 };
    let grid = mc_pairs(count, r_max, seed)?;
    let sampler = match model {
        Model::Scalar(s) => Sampler::scalar(&s.phi, s.mean, lmax)?,
        Model::Vector(v) => Sampler::vector(v, lmax)?,
        Model::Tensor(t) => Sampler::tensor(t, lmax)?,
    };
    let prepared = PreparedGrid::new(&grid, lmax)?;
    let reals = sampler.sample_many(&prepared, mix_seed(seed), n)?;
    let mut z = Vec::with_capacity(count + 9);
    for k in 0..count {
        let (p, q) = (2 * k, 2 * k + 1);
        let x = grid.points[p].position()?;
        let y = grid.points[q].position()?;
        let (a, b) = component_pair(sampler.kind(), k);
        let want = correlation(model, &Separation::new(y - x)?)?.entries()[a * sampler.kind().components() + b];
        let (est, se) = mc_covariance(&reals, (p, q), (a, b))?;
        z.push((est - want).abs() / se);
    }
    if let Model::Tensor(t) = model {
        for a in 0..9 {
            let want = if a % 4 == 0 { t.mean } else { 0.0 };
            let (m, se) = mc_mean(&reals, 0, a)?;
            z.push((m - want).abs() / se);
        }
    }
    // Chi-squared with two degrees of freedom exceeds this with
    // probability 0.01.
    let critical = -2.0 * 0.01f64.ln();
    let mut stats = Vec::new();
    for p in [0, 1.min(grid.len() - 1)] {
        let x: Vec<f64> = reals.iter().map(|r| r.at(p)[0]).collect();
        stats.push(jarque_bera(&x)?.0);
    }
    let normality = OracleReport::new("normality (Jarque-Bera statistic)", stats, vec![], critical);
    Ok(vec![OracleReport::new("Monte Carlo moments (standard errors)", z, vec![lmax], 3.0), normality])
}

fn mix_seed(seed: u64) -> u64 {
    seed ^ 0x5851_f42d_4c95_7f2d
}
