//! Covariances of the spherical-harmonic modes of a field, and their
//! semidefinite Cholesky factors.
//!
//! Expanding both plane waves of the spectral representation in
//! harmonics turns the correlation into a bilinear series
//! `R(x, y) = 4 pi sum b S(x) S(y) sum_atoms mass j(lambda r_x) j(lambda r_y)`.
//! The coefficient `b` between modes `(l, m, a)` and `(l', m', b)` is the
//! integral of `S_lm S_l'm' f_ab` over the sphere times `i^{l - l'}`, which
//! reduces to coupling coefficients because `f` has degree at most four.
//!
//! Modes are ordered lexicographically by degree, order and component.
//! Vector components are `i`; tensor components are all nine `(i, j)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coupling::{gg, CouplingTable};
use crate::error::{domain, Error, Result};
use crate::geometry::{AngularPair, Vec3};
use crate::model::{DirectionalDensity, EllipsePoint};
use crate::specfun::quadrature::SphereRule;
use crate::specfun::{harmonic_index, real_harmonics, sph_len, spherical_bessel_array};

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as exact zeros.
pub const ZERO_PIVOT_REL: f64 = 1e-12;
/// Pivots below this are reported as a failure of semidefiniteness.
pub const NEGATIVE_PIVOT_TOL: f64 = -1e-8;

/// Which field a covariance belongs to; fixes the components per harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    Tensor,
}

impl FieldKind {
    /// Components per harmonic in the mode layout.
    pub fn components(&self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => 3,
            FieldKind::Tensor => 9,
        }
    }

    fn density_components(&self) -> usize {
        self.components()
    }
}

/// A vector-field mode `(l, m, i)`, with `i` in `{-1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VectorModeIndex {
    pub ell: usize,
    pub m: i32,
    pub i: i32,
}

impl VectorModeIndex {
    pub fn new(ell: usize, m: i32, i: i32) -> Result<Self> {
        if m.unsigned_abs() as usize > ell || !(-1..=1).contains(&i) {
            return domain(format!("invalid vector mode ({ell}, {m}, {i})"));
        }
        Ok(Self { ell, m, i })
    }

    /// Position in the lexicographic order.
    pub fn position(&self) -> usize {
        harmonic_index(self.ell, self.m) * 3 + (self.i + 1) as usize
    }
}

/// A tensor-field mode `(u, w, i, j)`, with `i, j` in `{-1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorModeIndex {
    pub u: usize,
    pub w: i32,
    pub i: i32,
    pub j: i32,
}

impl TensorModeIndex {
    pub fn new(u: usize, w: i32, i: i32, j: i32) -> Result<Self> {
        if w.unsigned_abs() as usize > u || !(-1..=1).contains(&i) || !(-1..=1).contains(&j) {
            return domain(format!("invalid tensor mode ({u}, {w}, {i}, {j})"));
        }
        Ok(Self { u, w, i, j })
    }

    pub fn position(&self) -> usize {
        harmonic_index(self.u, self.w) * 9 + ((self.i + 1) * 3 + self.j + 1) as usize
    }
}

/// All modes of a vector field up to degree `lmax`, in order.
pub fn vector_modes(lmax: usize) -> Vec<VectorModeIndex> {
    let mut out = Vec::with_capacity(3 * sph_len(lmax));
    for ell in 0..=lmax {
        for m in -(ell as i32)..=ell as i32 {
            for i in -1..=1 {
                out.push(VectorModeIndex { ell, m, i });
            }
        }
    }
    out
}

/// All modes of a tensor field up to degree `lmax`, in order.
pub fn tensor_modes(lmax: usize) -> Vec<TensorModeIndex> {
    let mut out = Vec::with_capacity(9 * sph_len(lmax));
    for u in 0..=lmax {
        for w in -(u as i32)..=u as i32 {
            for i in -1..=1 {
                for j in -1..=1 {
                    out.push(TensorModeIndex { u, w, i, j });
                }
            }
        }
    }
    out
}

/// `i^{l - l'}` for even `l - l'`, zero otherwise.
fn phase(l: usize, lp: usize) -> f64 {
    let d = l as i64 - lp as i64;
    if d % 2 != 0 {
        0.0
    } else if (d / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One coefficient for a general density, looking blocks up in the shared cache.
fn entry(
    density: &DirectionalDensity,
    (l, m, a): (usize, i32, usize),
    (lp, mp, b): (usize, i32, usize),
) -> Result<f64> {
    let ph = phase(l, lp);
    if ph == 0.0 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for term in &density.terms {
        let big = term.degree;
        let block = gg(big, l, lp)?;
        let zero = block.get(0, 0, 0);
        if zero == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (k, t) in term.tensors.iter().enumerate() {
            inner += t[(a, b)] * block.get(k as i32 - big as i32, m, mp);
        }
        s += term.weight / (2 * big + 1) as f64 * zero * inner;
    }
    Ok(ph * (((2 * l + 1) * (2 * lp + 1)) as f64).sqrt() * s)
}

/// Coefficient between two vector modes for family `1` (transverse) or `2`.
pub fn b_vector(a: VectorModeIndex, b: VectorModeIndex, family: usize) -> Result<f64> {
    if family != 1 && family != 2 {
        return domain(format!("vector family {family} outside 1..=2"));
    }
    let d = DirectionalDensity::vector_family(family);
    entry(&d, (a.ell, a.m, (a.i + 1) as usize), (b.ell, b.m, (b.i + 1) as usize))
}

fn tensor_entry(d: &DirectionalDensity, a: TensorModeIndex, b: TensorModeIndex) -> Result<f64> {
    let pa = ((a.i + 1) * 3 + a.j + 1) as usize;
    let pb = ((b.i + 1) * 3 + b.j + 1) as usize;
    entry(d, (a.u, a.w, pa), (b.u, b.w, pb))
}

/// Coefficient between two tensor modes for family `1` or `2`.
pub fn b_tensor(a: TensorModeIndex, b: TensorModeIndex, family: usize) -> Result<f64> {
    if family != 1 && family != 2 {
        return domain(format!("isolated tensor family {family} outside 1..=2"));
    }
    tensor_entry(&DirectionalDensity::tensor_family(family), a, b)
}

/// Coefficient between two tensor modes for the shape family at `(v1, v2)`.
pub fn b_tensor3(a: TensorModeIndex, b: TensorModeIndex, v1: f64, v2: f64) -> Result<f64> {
    tensor_entry(&DirectionalDensity::tensor_shape(EllipsePoint::new(v1, v2)), a, b)
}

/// A dense symmetric mode covariance in lexicographic mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCovariance {
    pub kind: FieldKind,
    pub lmax: usize,
    dim: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl ModeCovariance {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// `base + v1 (at_v1 - base) + v2 (at_v2 - base)`: the shape family is
    /// affine in `v`, so three assemblies give every shape.
    pub fn affine(base: &Self, at_v1: &Self, at_v2: &Self, v: EllipsePoint) -> Self {
        let data = base
            .data
            .iter()
            .zip(&at_v1.data)
            .zip(&at_v2.data)
            .map(|((b, x), y)| b + v.v1 * (x - b) + v.v2 * (y - b))
            .collect();
        Self { kind: base.kind, lmax: base.lmax, dim: base.dim, data }
    }

    /// Degree, order and component of mode `k`.
    pub fn mode(&self, k: usize) -> (usize, i32, usize) {
        let c = self.kind.components();
        let h = k / c;
        let ell = (h as f64).sqrt().floor() as usize;
        (ell, h as i32 - (ell * ell + ell) as i32, k % c)
    }
}

/// Assemble the covariance of all modes up to `lmax` for a density.
pub fn assemble(kind: FieldKind, density: &DirectionalDensity, lmax: usize) -> Result<ModeCovariance> {
    if density.components != kind.density_components() {
        return domain("density does not match the field kind");
    }
    let c = kind.components();
    let max_outer = density.max_degree();
    let table = CouplingTable::new(lmax, max_outer)?;
    let dim = c * sph_len(lmax);
    let rows: Vec<Vec<f64>> = (0..sph_len(lmax))
        .into_par_iter()
        .map(|h| {
            let l = (h as f64).sqrt().floor() as usize;
            let m = h as i32 - (l * l + l) as i32;
            let mut block = vec![0.0; c * dim];
            let lo = l.saturating_sub(max_outer);
            let hi = (l + max_outer).min(lmax);
            for lp in lo..=hi {
                let ph = phase(l, lp);
                if ph == 0.0 {
                    continue;
                }
                let norm = ph * (((2 * l + 1) * (2 * lp + 1)) as f64).sqrt();
                for term in &density.terms {
                    let big = term.degree;
                    let g = table.block(big, l, lp);
                    let zero = g.get(0, 0, 0);
                    if zero == 0.0 {
                        continue;
                    }
                    let scale = norm * term.weight / (2 * big + 1) as f64 * zero;
                    for mp in -(lp as i32)..=lp as i32 {
                        let col0 = harmonic_index(lp, mp) * c;
                        for (k, t) in term.tensors.iter().enumerate() {
                            let gv = g.get(k as i32 - big as i32, m, mp);
                            if gv == 0.0 {
                                continue;
                            }
                            let f = scale * gv;
                            for a in 0..c {
                                let row = &mut block[a * dim..(a + 1) * dim];
                                for b in 0..c {
                                    row[col0 + b] += f * t[(a, b)];
                                }
                            }
                        }
                    }
                }
            }
            block
        })
        .collect();
    let mut data = Vec::with_capacity(dim * dim);
    for r in rows {
        data.extend(r);
    }
    // The pair swap symmetry holds analytically; remove rounding asymmetry.
    for r in 0..dim {
        for s in r + 1..dim {
            let v = 0.5 * (data[r * dim + s] + data[s * dim + r]);
            data[r * dim + s] = v;
            data[s * dim + r] = v;
        }
    }
    Ok(ModeCovariance { kind, lmax, dim, data })
}

/// Covariance of vector family `1` or `2`.
pub fn assemble_vector(family: usize, lmax: usize) -> Result<ModeCovariance> {
    if family != 1 && family != 2 {
        return domain(format!("vector family {family} outside 1..=2"));
    }
    assemble(FieldKind::Vector, &DirectionalDensity::vector_family(family), lmax)
}

/// Covariance of tensor family `1` or `2`.
pub fn assemble_tensor(family: usize, lmax: usize) -> Result<ModeCovariance> {
    if family != 1 && family != 2 {
        return domain(format!("isolated tensor family {family} outside 1..=2"));
    }
    assemble(FieldKind::Tensor, &DirectionalDensity::tensor_family(family), lmax)
}

/// Covariance of the tensor shape family at `v`.
pub fn assemble_tensor3(v: EllipsePoint, lmax: usize) -> Result<ModeCovariance> {
    assemble(FieldKind::Tensor, &DirectionalDensity::tensor_shape(v), lmax)
}

/// Scalar modes are independent with unit variance.
pub fn assemble_scalar(lmax: usize) -> Result<ModeCovariance> {
    assemble(FieldKind::Scalar, &DirectionalDensity::scalar(), lmax)
}

/// Truncated series for the covariance between the field at `x` and at
/// `y` contributed by a unit atom at `lambda`. Rows and columns follow the
/// component layout of `cov`; the result converges to the correlation at
/// `y - x` as the truncation degree grows.
pub fn series_correlation(cov: &ModeCovariance, lambda: f64, x: &Vec3, y: &Vec3) -> Result<DMatrix<f64>> {
    let c = cov.kind.components();
    let radial = |p: &Vec3| -> Result<Vec<f64>> {
        let r = p.norm();
        let dir = if r > 0.0 { AngularPair::from_vector(p)? } else { AngularPair::pole() };
        let s = real_harmonics(cov.lmax, &dir);
        let j = spherical_bessel_array(cov.lmax, lambda * r)?;
        Ok(s.iter().enumerate().map(|(h, sv)| sv * j[(h as f64).sqrt().floor() as usize]).collect())
    };
    let ax = radial(x)?;
    let ay = radial(y)?;
    let mut out = DMatrix::zeros(c, c);
    for (h, wx) in ax.iter().enumerate() {
        for (hp, wy) in ay.iter().enumerate() {
            let w = wx * wy;
            if w == 0.0 {
                continue;
            }
            for a in 0..c {
                for b in 0..c {
                    out[(a, b)] += w * cov.get(h * c + a, hp * c + b);
                }
            }
        }
    }
    Ok(out * (4.0 * std::f64::consts::PI))
}

/// A lower-triangular factor stored by rows, each row starting at its
/// first structurally nonzero column.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    first: Vec<usize>,
    /// Row `i` holds columns `first[i]..=i`.
    rows: Vec<Vec<f64>>,
    zero_pivots: usize,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of pivots that were treated as exact zeros.
    pub fn zero_pivots(&self) -> usize {
        self.zero_pivots
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i || j < self.first[i] {
            0.0
        } else {
            self.rows[i][j - self.first[i]]
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// `L z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let f = self.first[i];
                self.rows[i].iter().zip(&z[f..=i]).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Cholesky factorization of a symmetric positive-semidefinite matrix in
/// its given order, without pivoting. A pivot at rounding level makes its
/// whole column zero; a clearly negative pivot is an error.
pub fn semidefinite_cholesky(c: &ModeCovariance) -> Result<CholeskyFactor> {
    cholesky_rows(c.dim, |i, j| c.get(i, j))
}

/// As [`semidefinite_cholesky`] for any square matrix.
pub fn semidefinite_cholesky_matrix(a: &DMatrix<f64>) -> Result<CholeskyFactor> {
    if a.nrows() != a.ncols() {
        return domain("matrix must be square");
    }
    cholesky_rows(a.nrows(), |i, j| a[(i, j)])
}

fn cholesky_rows(n: usize, a: impl Fn(usize, usize) -> f64) -> Result<CholeskyFactor> {
    let first: Vec<usize> = (0..n).map(|i| (0..=i).find(|&j| a(i, j) != 0.0).unwrap_or(i)).collect();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a(i, i).abs()));
    let zero_tol = ZERO_PIVOT_REL * scale.max(f64::MIN_POSITIVE);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag = vec![0.0; n];
    let mut zero_pivots = 0;
    for i in 0..n {
        let fi = first[i];
        let mut row = vec![0.0; i - fi + 1];
        for j in fi..i {
            let dj = diag[j];
            if dj == 0.0 {
                continue;
            }
            let fj = first[j];
            let start = fi.max(fj);
            let rj = &rows[j];
            let mut s = a(i, j);
            for k in start..j {
                s -= row[k - fi] * rj[k - fj];
            }
            row[j - fi] = s / dj;
        }
        let mut d = a(i, i);
        for x in &row[..i - fi] {
            d -= x * x;
        }
        if d < NEGATIVE_PIVOT_TOL {
            return Err(Error::Factorization { index: i, pivot: d });
        }
        if d <= zero_tol {
            zero_pivots += 1;
            diag[i] = 0.0;
            row[i - fi] = 0.0;
        } else {
            diag[i] = d.sqrt();
            row[i - fi] = diag[i];
        }
        rows.push(row);
    }
    // Columns at zero pivots must be empty below the diagonal as well.
    for i in 0..n {
        let fi = first[i];
        for j in fi..i {
            if diag[j] == 0.0 {
                rows[i][j - fi] = 0.0;
            }
        }
    }
    Ok(CholeskyFactor { dim: n, first, rows, zero_pivots })
}

/// Remainders below this fraction of the largest column norm of the Gram
/// factor mark a mode as linearly dependent on earlier ones.
pub const GRAM_ZERO_REL: f64 = 1e-7;

/// The semidefinite Cholesky factor of the mode covariance of `density`,
/// computed without forming the covariance.
///
/// The covariance is a Gram matrix `G G^T`: an exact sphere quadrature of
/// `S S^T` against `f = V V^T` gives one column of `G^T` per node, rank
/// and parity. A Householder QR of `G^T` in mode order then yields the
/// same lower-triangular factor as [`semidefinite_cholesky`], but with
/// rounding errors of order `eps` instead of `eps` times the square of
/// the factor's condition number. For tensor modes above degree six or so
/// the direct route loses pivots to that amplification.
pub fn gram_factor(kind: FieldKind, density: &DirectionalDensity, lmax: usize) -> Result<CholeskyFactor> {
    if density.components != kind.density_components() {
        return domain("density does not match the field kind");
    }
    let c = kind.components();
    let n = c * sph_len(lmax);
    let rule = SphereRule::new(2 * lmax + 2 * density.max_degree());
    let degree: Vec<usize> = (0..sph_len(lmax)).map(|h| (h as f64).sqrt().floor() as usize).collect();

    // Rows of G^T, one per (node, density eigenvector, parity).
    let rows: Vec<Vec<Vec<f64>>> = rule
        .nodes()
        .par_iter()
        .map(|(p, w)| {
            let s = real_harmonics(lmax, p);
            let eig = density.at(p).symmetric_eigen();
            let top = eig.eigenvalues.amax();
            let mut out = Vec::new();
            for (k, lam) in eig.eigenvalues.iter().enumerate() {
                if *lam <= 1e-13 * top {
                    continue;
                }
                let u = eig.eigenvectors.column(k) * (w * lam).sqrt();
                for parity in 0..2 {
                    let mut row = vec![0.0; n];
                    for (h, sv) in s.iter().enumerate() {
                        let l = degree[h];
                        if l % 2 != parity {
                            continue;
                        }
                        // Real part of i^l for even l, imaginary part for odd l.
                        let sign = if l % 4 < 2 { 1.0 } else { -1.0 };
                        for a in 0..c {
                            row[h * c + a] = sign * sv * u[a];
                        }
                    }
                    out.push(row);
                }
            }
            out
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let m = rows.len();
    // Column-major copy of G^T.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    drop(rows);

    let scale = cols.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>()).fold(0.0f64, f64::max).sqrt();
    let tol = GRAM_ZERO_REL * scale.max(f64::MIN_POSITIVE);
    let mut pivots: Vec<usize> = Vec::new();
    let mut lrows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut zero_pivots = 0;
    for i in 0..n {
        let k = pivots.len();
        let mut row = vec![0.0; i + 1];
        for (t, &j) in pivots.iter().enumerate() {
            row[j] = cols[i][t];
        }
        let norm = if k < m { cols[i][k..].iter().map(|x| x * x).sum::<f64>().sqrt() } else { 0.0 };
        if norm <= tol {
            zero_pivots += 1;
            lrows.push(row);
            continue;
        }
        row[i] = norm;
        lrows.push(row);
        // Reflect the remainder of column i onto +norm e_k.
        let x0 = cols[i][k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[i][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let flip = alpha < 0.0;
        let (_, rest) = cols.split_at_mut(i + 1);
        rest.par_iter_mut().for_each(|col| {
            let tail = &mut col[k..];
            let d: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * d / vv;
            for (t, a) in tail.iter_mut().zip(&v) {
                *t -= f * a;
            }
            if flip {
                tail[0] = -tail[0];
            }
        });
        pivots.push(i);
    }
    let mut first = Vec::with_capacity(n);
    let mut trimmed = Vec::with_capacity(n);
    for (i, row) in lrows.into_iter().enumerate() {
        let f = row.iter().position(|x| *x != 0.0).unwrap_or(i);
        first.push(f);
        trimmed.push(row[f..].to_vec());
    }
    Ok(CholeskyFactor { dim: n, first, rows: trimmed, zero_pivots })
}
