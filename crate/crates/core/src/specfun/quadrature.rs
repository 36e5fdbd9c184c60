//! Gauss-Legendre rules and a product rule on the sphere.

use crate::geometry::AngularPair;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

/// Gauss-Legendre in `cos theta` times the trapezoid rule in `phi`.
///
/// `SphereRule::new(d)` integrates every polynomial of total degree `d`
/// on the unit sphere exactly.
#[derive(Debug, Clone)]
pub struct SphereRule {
    nodes: Vec<(AngularPair, f64)>,
    degree: usize,
}

impl SphereRule {
    pub fn new(degree: usize) -> Self {
        let n_gl = degree / 2 + 1;
        let n_phi = degree + 1;
        let (x, w) = gauss_legendre(n_gl);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_gl * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            for k in 0..n_phi {
                let p = AngularPair::new(xi.acos(), k as f64 * dphi).expect("node in range");
                nodes.push((p, wi * dphi));
            }
        }
        Self { nodes, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[(AngularPair, f64)] {
        &self.nodes
    }

    pub fn integrate(&self, mut f: impl FnMut(&AngularPair) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * f(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn sphere_area_and_second_moment() {
        let rule = SphereRule::new(6);
        let pi = std::f64::consts::PI;
        assert!((rule.integrate(|_| 1.0) - 4.0 * pi).abs() < 1e-13);
        let xx = rule.integrate(|p| p.unit_vector()[2].powi(2));
        assert!((xx - 4.0 * pi / 3.0).abs() < 1e-13);
    }
}
