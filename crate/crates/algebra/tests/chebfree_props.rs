use freestein_algebra::chebfree::*;
use freestein_algebra::Q;
use num::{ToPrimitive, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn upoly_strategy(max_deg: usize) -> impl Strategy<Value = UPoly> {
    prop::collection::vec((0..=max_deg, -6i64..=6, 1i64..=3), 1..6)
        .prop_map(|terms| UPoly::from_coeffs(terms.into_iter().map(|(n, a, b)| (n, rat(a, b)))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bochner_vanishes(p in upoly_strategy(12)) {
        prop_assert!(bochner_residual(&p).is_zero());
    }

    #[test]
    fn monomial_roundtrip(p in upoly_strategy(10)) {
        prop_assert_eq!(u_expand(&p.to_monomial()), p);
    }

    #[test]
    fn exact_and_float_evaluation_agree(p in upoly_strategy(8), x in -8i64..=8) {
        let xq = rat(x, 4);
        let exact = p.eval_exact(&xq).to_f64().unwrap();
        let float = p.eval(x as f64 / 4.0);
        prop_assert!((exact - float).abs() <= 1e-9 * (1.0 + exact.abs()));
    }

    #[test]
    fn divided_difference_matches_quotient(p in upoly_strategy(8), x in -6i64..=6, y in -6i64..=6) {
        prop_assume!(x != y);
        let (xq, yq) = (rat(x, 3), rat(y, 3));
        let quotient = (p.eval_exact(&xq) - p.eval_exact(&yq)) / (&xq - &yq);
        prop_assert_eq!(j_u_apply(&p).eval_exact(&xq, &yq), quotient);
    }

    #[test]
    fn ou_curvature_on_combinations(p in upoly_strategy(6)) {
        let gap = ou_gamma2(&p).sub(&ou_gamma(&p));
        let scale = ou_gamma(&p).grid_min(64).abs().max(1.0);
        let cert = certify_nonnegative(&gap, 64, 1e-9 * scale);
        prop_assert!(cert.nonnegative, "{} at {}", cert.minimum, p);
    }
}

#[test]
fn bochner_on_basis() {
    for n in 0..=12 {
        assert!(bochner_residual(&UPoly::basis(n)).is_zero(), "U_{n}");
    }
}

#[test]
fn gamma2_gap_is_grid_nonnegative() {
    for n in 1..=10 {
        let e = gamma2_gap(n).unwrap();
        let cert = certify_nonnegative(&e, 64, 1e-9);
        assert!(cert.nonnegative, "E_{n} min {}", cert.minimum);
        // twice the curvature gap on the basis element
        let p = UPoly::basis(n);
        let two = Q::from_integer(2.into());
        assert_eq!(e, ou_gamma2(&p).sub(&ou_gamma(&p)).scale(&two));
    }
    assert!(gamma2_gap(0).is_err());
    assert!(gamma2_gap(13).is_err());
}

#[test]
fn eigenvalues_of_ou() {
    for n in 0..8 {
        let u = UPoly::basis(n);
        assert_eq!(ou_apply(&u), u.scale(&Q::from_integer((-(n as i64)).into())));
    }
    assert!(ou_apply(&UPoly::basis(0)).coeff(0).is_zero());
}
