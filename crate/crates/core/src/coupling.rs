//! Real coupling coefficients for products of real harmonics.
//!
//! `g^{m[m1,m2]}_{l[l1,l2]}` is the real counterpart of a Clebsch-Gordan
//! coefficient: it couples the degree-`l1` and degree-`l2` real
//! representations of the rotation group into degree `l`. It is obtained
//! by conjugating the complex coefficient with the complex-to-real change
//! of basis on each of the three spaces.
//!
//! Each block is fixed up to an overall sign. When `l + l1 + l2` is even we
//! make `g^{0[0,0]}` positive; when it is odd (that entry vanishes) we make
//! the first nonzero entry in `(m, m1, m2)` lexicographic order positive.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use parking_lot::RwLock;

use crate::error::{domain, Result};
use crate::geometry::Mat3;

/// One `(l, l1, l2)` block of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    pub ell: usize,
    pub ell1: usize,
    pub ell2: usize,
    data: Vec<f64>,
}

impl CouplingBlock {
    #[inline]
    pub fn get(&self, m: i32, m1: i32, m2: i32) -> f64 {
        let (l, l1, l2) = (self.ell as i32, self.ell1 as i32, self.ell2 as i32);
        let n1 = 2 * l1 + 1;
        let n2 = 2 * l2 + 1;
        self.data[(((m + l) * n1 + (m1 + l1)) * n2 + (m2 + l2)) as usize]
    }

    /// True when the three degrees cannot couple.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// The block as a matrix: rows `m`, columns `(m1, m2)` with `m2` fastest.
    pub fn matrix(&self) -> DMatrix<f64> {
        let rows = 2 * self.ell + 1;
        let cols = (2 * self.ell1 + 1) * (2 * self.ell2 + 1);
        DMatrix::from_row_slice(rows, cols, &self.data)
    }
}

pub fn triangle(l: usize, l1: usize, l2: usize) -> bool {
    l <= l1 + l2 && l1 <= l + l2 && l2 <= l + l1
}

fn factorials() -> &'static [f64] {
    static F: OnceLock<Vec<f64>> = OnceLock::new();
    F.get_or_init(|| {
        let mut f = vec![1.0f64; 171];
        for k in 1..171 {
            f[k] = f[k - 1] * k as f64;
        }
        f
    })
}

/// Complex Clebsch-Gordan coefficient `<l1 m1 l2 m2 | l m>` by Racah's sum.
pub fn clebsch_gordan(l1: i32, m1: i32, l2: i32, m2: i32, l: i32, m: i32) -> f64 {
    if m1 + m2 != m || m1.abs() > l1 || m2.abs() > l2 || m.abs() > l || l < (l1 - l2).abs() || l > l1 + l2 {
        return 0.0;
    }
    let f = factorials();
    let fa = |n: i32| f[n as usize];
    let pre = ((2 * l + 1) as f64 * fa(l + l1 - l2) * fa(l - l1 + l2) * fa(l1 + l2 - l) / fa(l1 + l2 + l + 1)).sqrt()
        * (fa(l + m) * fa(l - m) * fa(l1 - m1) * fa(l1 + m1) * fa(l2 - m2) * fa(l2 + m2)).sqrt();
    let kmin = 0.max(l2 - l - m1).max(l1 - l + m2);
    let kmax = (l1 + l2 - l).min(l1 - m1).min(l2 + m2);
    let mut s = 0.0;
    for k in kmin..=kmax {
        let term = 1.0
            / (fa(k)
                * fa(l1 + l2 - l - k)
                * fa(l1 - m1 - k)
                * fa(l2 + m2 - k)
                * fa(l - l2 + m1 + k)
                * fa(l - l1 - m2 + k));
        s += if k % 2 == 0 { term } else { -term };
    }
    pre * s
}

/// Nonzero entries `(mu, re, im)` of row `m` of the complex-to-real matrix.
fn real_row(m: i32) -> [(i32, f64, f64); 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = |a: i32| if a % 2 == 0 { 1.0 } else { -1.0 };
    if m == 0 {
        [(0, 1.0, 0.0), (0, 0.0, 0.0)]
    } else if m > 0 {
        [(m, sign(m) * h, 0.0), (-m, h, 0.0)]
    } else {
        let a = -m;
        [(-a, 0.0, h), (a, 0.0, -sign(a) * h)]
    }
}

fn compute_block(l: usize, l1: usize, l2: usize) -> CouplingBlock {
    let (li, l1i, l2i) = (l as i32, l1 as i32, l2 as i32);
    let size = (2 * l + 1) * (2 * l1 + 1) * (2 * l2 + 1);
    let mut re = vec![0.0; size];
    let mut im = vec![0.0; size];
    if triangle(l, l1, l2) {
        let mut idx = 0;
        for m in -li..=li {
            let rm = real_row(m);
            for m1 in -l1i..=l1i {
                let r1 = real_row(m1);
                for m2 in -l2i..=l2i {
                    let r2 = real_row(m2);
                    let (mut sr, mut si) = (0.0, 0.0);
                    for &(mu1, a_re, a_im) in r1.iter().take(if m1 == 0 { 1 } else { 2 }) {
                        for &(mu2, b_re, b_im) in r2.iter().take(if m2 == 0 { 1 } else { 2 }) {
                            let mu = mu1 + mu2;
                            for &(nu, c_re, c_im) in rm.iter().take(if m == 0 { 1 } else { 2 }) {
                                if nu != mu {
                                    continue;
                                }
                                let cg = clebsch_gordan(l1i, mu1, l2i, mu2, li, mu);
                                if cg == 0.0 {
                                    continue;
                                }
                                // conj(c) * a * b
                                let (ab_re, ab_im) = (a_re * b_re - a_im * b_im, a_re * b_im + a_im * b_re);
                                let (c_re, c_im) = (c_re, -c_im);
                                sr += cg * (c_re * ab_re - c_im * ab_im);
                                si += cg * (c_re * ab_im + c_im * ab_re);
                            }
                        }
                    }
                    re[idx] = sr;
                    im[idx] = si;
                    idx += 1;
                }
            }
        }
    }
    let mut data = if (l + l1 + l2) % 2 == 0 { re } else { im };
    let sign = if (l + l1 + l2) % 2 == 0 {
        let zero = ((li * (2 * l1i + 1) + l1i) * (2 * l2i + 1) + l2i) as usize;
        if data.get(zero).copied().unwrap_or(0.0) < 0.0 {
            -1.0
        } else {
            1.0
        }
    } else {
        match data.iter().find(|x| x.abs() > 1e-14) {
            Some(&x) if x < 0.0 => -1.0,
            _ => 1.0,
        }
    };
    for x in data.iter_mut() {
        *x *= sign;
        // Entries that should vanish come out at rounding level.
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    CouplingBlock { ell: l, ell1: l1, ell2: l2, data }
}

type Cache = RwLock<HashMap<(usize, usize, usize), Arc<CouplingBlock>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Largest degree sum the factorial table supports.
const MAX_DEGREE_SUM: usize = 169;

/// The `(l, l1, l2)` block of real coupling coefficients, memoised.
///
/// Blocks that violate the triangle rule are returned filled with zeros.
pub fn gg(l: usize, l1: usize, l2: usize) -> Result<Arc<CouplingBlock>> {
    if l + l1 + l2 > MAX_DEGREE_SUM {
        return domain(format!("degrees ({l}, {l1}, {l2}) too large for coupling"));
    }
    if let Some(b) = cache().read().get(&(l, l1, l2)) {
        return Ok(b.clone());
    }
    let block = Arc::new(compute_block(l, l1, l2));
    cache().write().insert((l, l1, l2), block.clone());
    Ok(block)
}

/// The block as a `(2l+1) x (2l1+1)(2l2+1)` matrix (see [`CouplingBlock::matrix`]).
pub fn gg_matrix(l: usize, l1: usize, l2: usize) -> Result<DMatrix<f64>> {
    Ok(gg(l, l1, l2)?.matrix())
}

/// A read-only set of blocks `(l, l1, l2)` with `l <= max_outer` and
/// `l1, l2 <= lmax`, fetched once so hot loops avoid the shared cache.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    lmax: usize,
    max_outer: usize,
    blocks: Vec<Arc<CouplingBlock>>,
}

impl CouplingTable {
    pub fn new(lmax: usize, max_outer: usize) -> Result<Self> {
        let mut blocks = Vec::with_capacity((max_outer + 1) * (lmax + 1) * (lmax + 1));
        for l in 0..=max_outer {
            for l1 in 0..=lmax {
                for l2 in 0..=lmax {
                    blocks.push(gg(l, l1, l2)?);
                }
            }
        }
        Ok(Self { lmax, max_outer, blocks })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    pub fn block(&self, l: usize, l1: usize, l2: usize) -> &CouplingBlock {
        debug_assert!(l <= self.max_outer && l1 <= self.lmax && l2 <= self.lmax);
        &self.blocks[(l * (self.lmax + 1) + l1) * (self.lmax + 1) + l2]
    }
}

/// Expand the Kronecker product `D^{l1}(k) (x) D^{l2}(k)` over coupled
/// degrees: `sum_l G_l^T D^l(k) G_l` with `G_l` from [`gg_matrix`].
pub fn wigner_product_expand(l1: usize, l2: usize, k: &Mat3) -> Result<DMatrix<f64>> {
    let ds = crate::specfun::wigner_d_matrices(l1 + l2, k);
    let n = (2 * l1 + 1) * (2 * l2 + 1);
    let mut out = DMatrix::zeros(n, n);
    for l in l1.abs_diff(l2)..=l1 + l2 {
        let g = gg_matrix(l, l1, l2)?;
        out += g.transpose() * &ds[l] * &g;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_orthogonal;
    use crate::specfun::wigner_d_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clebsch_gordan_known_values() {
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, 0, 1, 0, 2, 0) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(2, 1, 1, 0, 2, 1) - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 1, 2), 0.0);
    }

    #[test]
    fn scalar_coupling_of_two_vectors() {
        let b = gg(0, 1, 1).unwrap();
        for i in -1..=1 {
            for j in -1..=1 {
                let want = if i == j { (1.0f64 / 3.0).sqrt() } else { 0.0 };
                assert!((b.get(0, i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degree_one_from_two_vectors_is_skew() {
        let g = gg_matrix(1, 1, 1).unwrap();
        assert!(g.amax() > 0.5);
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((g[(m, i * 3 + j)] + g[(m, j * 3 + i)]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn named_degree_two_values() {
        let s = |x: f64| x.sqrt();
        let b = gg(0, 2, 2).unwrap();
        for n in -2..=2 {
            for q in -2..=2 {
                let want = if n == q { s(0.2) } else { 0.0 };
                assert!((b.get(0, n, q) - want).abs() < 1e-15);
            }
        }
        assert!((gg(2, 2, 2).unwrap().get(0, 0, 0) - s(2.0 / 7.0)).abs() < 1e-15);
        assert!((gg(4, 2, 2).unwrap().get(0, 0, 0) - 3.0 * s(2.0) / s(35.0)).abs() < 1e-15);
    }

    #[test]
    fn triangle_violation_is_zero() {
        assert!(gg(5, 1, 2).unwrap().is_zero());
        assert!(!gg(3, 1, 2).unwrap().is_zero());
    }

    #[test]
    fn blocks_have_orthonormal_rows() {
        for (l, l1, l2) in [(2, 1, 1), (4, 2, 2), (3, 2, 3), (5, 4, 3), (6, 6, 6)] {
            let g = gg_matrix(l, l1, l2).unwrap();
            let gram = &g * g.transpose();
            let n = 2 * l + 1;
            assert!((gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-13, "({l},{l1},{l2})");
        }
    }

    #[test]
    fn completeness_over_coupled_degrees() {
        for (l1, l2) in [(1, 1), (2, 3), (4, 4)] {
            let n = (2 * l1 + 1) * (2 * l2 + 1);
            let mut sum = DMatrix::<f64>::zeros(n, n);
            for l in l1.abs_diff(l2)..=l1 + l2 {
                let g = gg_matrix(l, l1, l2).unwrap();
                sum += g.transpose() * g;
            }
            assert!((sum - DMatrix::<f64>::identity(n, n)).amax() < 1e-13);
        }
    }

    #[test]
    fn product_expansion_reproduces_kronecker_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let k = random_orthogonal(&mut rng, false);
            for l1 in 0..=3 {
                for l2 in 0..=3 {
                    let got = wigner_product_expand(l1, l2, &k).unwrap();
                    let want = wigner_d_matrix(l1, &k).kronecker(&wigner_d_matrix(l2, &k));
                    assert!((got - want).amax() < 1e-12, "({l1},{l2})");
                }
            }
        }
    }

    #[test]
    fn odd_blocks_have_positive_leading_entry() {
        for (l, l1, l2) in [(1, 1, 1), (2, 2, 1), (3, 2, 2)] {
            let g = gg_matrix(l, l1, l2).unwrap();
            let lead = (0..g.nrows())
                .flat_map(|r| (0..g.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| g[(r, c)])
                .find(|x| x.abs() > 1e-14)
                .unwrap();
            assert!(lead > 0.0);
        }
    }
}
