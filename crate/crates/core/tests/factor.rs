use isofield::bmodes::{assemble, gram_factor, semidefinite_cholesky, FieldKind};
use isofield::model::{DirectionalDensity, EllipsePoint};

fn families() -> Vec<(&'static str, FieldKind, DirectionalDensity)> {
    vec![
        ("vector 1", FieldKind::Vector, DirectionalDensity::vector_family(1)),
        ("vector 2", FieldKind::Vector, DirectionalDensity::vector_family(2)),
        ("tensor 1", FieldKind::Tensor, DirectionalDensity::tensor_family(1)),
        ("tensor 2", FieldKind::Tensor, DirectionalDensity::tensor_family(2)),
        ("shape (0.5, 0)", FieldKind::Tensor, DirectionalDensity::tensor_shape(EllipsePoint::new(0.5, 0.0))),
        ("shape (1, 0)", FieldKind::Tensor, DirectionalDensity::tensor_shape(EllipsePoint::new(1.0, 0.0))),
        ("shape (0.3, 0.2)", FieldKind::Tensor, DirectionalDensity::tensor_shape(EllipsePoint::new(0.3, 0.2))),
    ]
}

#[test]
fn factor_reproduces_covariance_at_high_degree() {
    for lmax in [8, 12] {
        for (name, kind, d) in families() {
            let b = assemble(kind, &d, lmax).unwrap().to_dmatrix();
            let l = gram_factor(kind, &d, lmax).unwrap().to_dmatrix();
            let err = (&l * l.transpose() - b).amax();
            assert!(err < 1e-9, "{name} at degree {lmax}: {err:e}");
        }
    }
}

#[test]
fn skipped_modes_have_zero_columns() {
    for (name, kind, d) in families() {
        let f = gram_factor(kind, &d, 6).unwrap();
        let l = f.to_dmatrix();
        let mut zero = 0;
        for i in 0..l.nrows() {
            if l[(i, i)] == 0.0 {
                zero += 1;
                assert!(l.column(i).iter().all(|x| *x == 0.0), "{name}: column {i}");
            } else {
                assert!(l[(i, i)] > 0.0);
            }
        }
        assert_eq!(zero, f.zero_pivots(), "{name}");
        assert!(zero > 0, "{name}: every family is rank deficient");
    }
}

#[test]
fn factor_is_nested_in_degree() {
    // Modes are ordered by degree, so the leading block of a factor at
    // higher degree is the factor at lower degree.
    for (name, kind, d) in families() {
        let small = gram_factor(kind, &d, 4).unwrap().to_dmatrix();
        let big = gram_factor(kind, &d, 6).unwrap().to_dmatrix();
        let n = small.nrows();
        let err = (big.view((0, 0), (n, n)) - &small).amax();
        assert!(err < 1e-10, "{name}: {err:e}");
    }
}

#[test]
fn factor_matches_direct_cholesky_where_that_is_stable() {
    for (name, kind, d) in families() {
        let c = assemble(kind, &d, 3).unwrap();
        let direct = semidefinite_cholesky(&c).unwrap();
        let gram = gram_factor(kind, &d, 3).unwrap();
        assert_eq!(direct.zero_pivots(), gram.zero_pivots(), "{name}");
        assert!((direct.to_dmatrix() - gram.to_dmatrix()).amax() < 1e-9, "{name}");
    }
}

#[test]
fn mismatched_density_is_rejected() {
    assert!(gram_factor(FieldKind::Tensor, &DirectionalDensity::vector_family(1), 2).is_err());
}
