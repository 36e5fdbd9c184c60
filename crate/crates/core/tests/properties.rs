use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isofield::bmodes::semidefinite_cholesky_matrix;
use isofield::correlation::{correlation, scalar_correlation, tensor_correlation, vector_correlation, Separation};
use isofield::geometry::{random_orthogonal, Rank4Tensor, Vec3};
use isofield::model::{
    f_matrix_tensor, Atom, EllipsePoint, Model, ScalarModel, SimplexCoords, SpectralMeasure, TensorModel, VectorModel,
};
use isofield::simulate::{discretize, GridSpec, PreparedGrid, Sampler, SpectralInput};
use isofield::verify::covariance_with_error;

fn measure(a: &[(f64, f64)]) -> SpectralMeasure {
    let mut a = a.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    a.dedup_by(|x, y| x.0 == y.0);
    SpectralMeasure::new(a.iter().map(|&(l, m)| Atom::new(l, m)).collect())
}

fn atoms(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..4.0, 0.01f64..1.0), 1..=max)
}

fn shape() -> impl Strategy<Value = EllipsePoint> {
    (0.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| {
        let s = r.sqrt();
        EllipsePoint::new(0.5 + 0.5 * s * t.cos(), s * t.sin() / 8f64.sqrt())
    })
}

fn vector_model() -> impl Strategy<Value = VectorModel> {
    (atoms(3), atoms(3)).prop_map(|(a, b)| VectorModel { phi1: measure(&a), phi2: measure(&b) })
}

fn tensor_model() -> impl Strategy<Value = TensorModel> {
    (atoms(2), atoms(2), atoms(3), prop::collection::vec(shape(), 3), -2.0f64..2.0).prop_map(|(a, b, c, v, mean)| {
        let phi3 = measure(&c);
        let n = phi3.atoms.len();
        TensorModel { mean, phi1: measure(&a), phi2: measure(&b), phi3, shape: v[..n].to_vec() }
    })
}

fn separation() -> impl Strategy<Value = Separation> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, c)| Separation::from_slice([a, b, c]).unwrap())
}

fn simplex() -> impl Strategy<Value = SimplexCoords> {
    (prop::array::uniform4(0.0f64..1.0), -1.0f64..=1.0).prop_filter_map("degenerate weights", |(w, t)| {
        let s: f64 = w.iter().sum();
        if s < 1e-6 {
            return None;
        }
        let u: Vec<f64> = w.iter().map(|x| x / s).collect();
        let u5 = t * (u[2] * u[3] / 2.0).sqrt();
        SimplexCoords::new([u[0], u[1], u[2], u[3], u5]).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admissible_densities_are_psd_with_unit_trace(u in simplex()) {
        let f = f_matrix_tensor(&u);
        prop_assert!((f.trace() - 1.0).abs() < 1e-12);
        let t = Rank4Tensor::from_voigt(&f);
        let pairs = DMatrix::from_fn(9, 9, |a, b| t.pair(a, b));
        prop_assert!(SymmetricEigen::new(pairs).eigenvalues.min() >= -1e-12);
    }

    #[test]
    fn shape_admissibility_agrees_everywhere(v1 in -1.0f64..2.0, v2 in -1.0f64..1.0) {
        let v = EllipsePoint::new(v1, v2);
        let model = TensorModel {
            mean: 0.0,
            phi1: SpectralMeasure::empty(),
            phi2: SpectralMeasure::empty(),
            phi3: measure(&[(1.0, 1.0)]),
            shape: vec![v],
        };
        let inside = 4.0 * (v1 - 0.5).powi(2) + 8.0 * v2 * v2 <= 1.0;
        // Skip points within rounding of the boundary.
        prop_assume!((4.0 * (v1 - 0.5).powi(2) + 8.0 * v2 * v2 - 1.0).abs() > 1e-9);
        prop_assert_eq!(v.is_admissible(), inside);
        prop_assert_eq!(model.validate().is_empty(), inside);
        prop_assert_eq!(SimplexCoords::from_shape(v).is_ok(), inside);
    }

    #[test]
    fn vector_correlation_is_symmetric_and_even(m in vector_model(), xi in separation()) {
        let r = vector_correlation(&m, &xi).unwrap();
        let back = vector_correlation(&m, &Separation::new(-xi.vector()).unwrap()).unwrap();
        prop_assert!((r - r.transpose()).amax() < 1e-14);
        prop_assert!((r - back).amax() < 1e-14);
    }

    #[test]
    fn tensor_correlation_has_index_symmetries(m in tensor_model(), xi in separation()) {
        let r = tensor_correlation(&m, &xi).unwrap();
        let back = tensor_correlation(&m, &Separation::new(-xi.vector()).unwrap()).unwrap();
        prop_assert!(r.max_abs_diff(&back) < 1e-14);
        for i in 0..3 { for j in 0..3 { for l in 0..3 { for k in 0..3 {
            let x = r.get(i, j, l, k);
            prop_assert!((x - r.get(j, i, l, k)).abs() < 1e-14);
            prop_assert!((x - r.get(l, k, i, j)).abs() < 1e-14);
        }}}}
    }

    #[test]
    fn correlations_are_rotation_equivariant(m in tensor_model(), xi in separation(), seed in any::<u64>()) {
        let k = random_orthogonal(&mut ChaCha8Rng::seed_from_u64(seed), true);
        let model = Model::Tensor(m);
        let moved = correlation(&model, &Separation::new(k * xi.vector()).unwrap()).unwrap();
        let turned = correlation(&model, &xi).unwrap().rotated(&k);
        prop_assert!(moved.max_abs_diff(&turned) < 1e-12);
    }

    #[test]
    fn scalar_correlation_is_bounded_by_variance(a in atoms(4), rho in 0.0f64..10.0) {
        let m = ScalarModel { mean: 0.0, phi: measure(&a) };
        let r0 = scalar_correlation(&m, 0.0).unwrap();
        prop_assert!(scalar_correlation(&m, rho).unwrap().abs() <= r0 + 1e-15);
        prop_assert!((r0 - m.phi.total_mass()).abs() < 1e-14);
    }

    #[test]
    fn discretization_keeps_mass_and_range(
        values in prop::collection::vec(0.0f64..3.0, 2..40),
        start in 0.0f64..2.0,
        n in 1usize..30,
    ) {
        let lambda: Vec<f64> = (0..values.len()).map(|k| start + 0.25 * k as f64).collect();
        let exact: f64 = lambda.windows(2).zip(values.windows(2)).map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])).sum();
        let m = discretize(&SpectralInput::Tabulated { lambda: lambda.clone(), density: values }, n).unwrap();
        prop_assert!((m.total_mass() - exact).abs() <= 1e-12 * exact.max(1.0));
        for a in &m.atoms {
            prop_assert!(a.lambda >= lambda[0] && a.lambda <= *lambda.last().unwrap());
            prop_assert!(a.mass >= 0.0);
        }
    }

    #[test]
    fn jackknife_matches_explicit_leave_one_out(x in prop::collection::vec(-5.0f64..5.0, 3..30), shift in -3.0f64..3.0) {
        let y: Vec<f64> = x.iter().enumerate().map(|(k, v)| v * 0.5 + shift + (k as f64).sin()).collect();
        let cov = |a: &[f64], b: &[f64]| {
            let n = a.len() as f64;
            let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
            a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / (n - 1.0)
        };
        let n = x.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let a: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
                let b: Vec<f64> = y.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
                cov(&a, &b)
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / n as f64;
        let se = (loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n as f64 - 1.0) / n as f64).sqrt();
        let (est, got) = covariance_with_error(&x, &y).unwrap();
        prop_assert!((est - cov(&x, &y)).abs() < 1e-10);
        prop_assert!((got - se).abs() < 1e-9 * se.max(1.0));
    }

    #[test]
    fn semidefinite_factor_of_low_rank_matrix(
        cols in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 1..5),
    ) {
        let g = DMatrix::from_fn(8, cols.len(), |i, j| cols[j][i]);
        let a = &g * g.transpose();
        let l = semidefinite_cholesky_matrix(&a).unwrap().to_dmatrix();
        prop_assert!((&l * l.transpose() - &a).amax() < 1e-9);
        prop_assert!(l.upper_triangle().lower_triangle() == DMatrix::from_diagonal(&l.diagonal()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampling_is_reproducible_per_realization(m in vector_model(), seed in any::<u64>()) {
        let grid = GridSpec::from_positions(&[Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, -0.2, 0.5)]).unwrap();
        let sampler = Sampler::vector(&m, 4).unwrap();
        let prepared = PreparedGrid::new(&grid, 4).unwrap();
        let a = sampler.sample(&prepared, seed, 3).unwrap();
        let b = sampler.sample(&prepared, seed, 3).unwrap();
        let c = sampler.sample(&prepared, seed, 4).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        prop_assert!(a.values != c.values);
        let many = sampler.sample_many(&prepared, seed, 5).unwrap();
        prop_assert_eq!(&many[3].values, &a.values);
    }
}
