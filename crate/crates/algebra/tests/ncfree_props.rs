use freestein_algebra::ncfree::*;
use freestein_algebra::Q;
use num::{One, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn word_strategy(arity: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=arity, 0..=max_len).prop_map(Word)
}

fn poly_strategy(arity: usize, max_deg: usize) -> impl Strategy<Value = NCPoly> {
    prop::collection::vec((word_strategy(arity, max_deg), -5i64..=5, 1i64..=4), 0..6).prop_map(move |terms| {
        NCPoly::from_terms(arity, terms.into_iter().map(|(w, n, d)| (w, rat(n, d)))).unwrap()
    })
}

fn arity_poly(max_deg: usize) -> impl Strategy<Value = (usize, NCPoly)> {
    (1usize..=3).prop_flat_map(move |n| (Just(n), poly_strategy(n, max_deg)))
}

fn arity_pair(max_deg: usize) -> impl Strategy<Value = (usize, NCPoly, NCPoly)> {
    (1usize..=3).prop_flat_map(move |n| (Just(n), poly_strategy(n, max_deg), poly_strategy(n, max_deg)))
}

fn one_tensor(n: usize, p: &NCPoly, left: bool) -> NCTensor {
    let one = NCPoly::one(n);
    if left {
        NCTensor::simple(p, &one)
    } else {
        NCTensor::simple(&one, p)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leibniz((n, p, q) in arity_pair(3)) {
        for j in 1..=n {
            let lhs = partial(&p.mul(&q), j).unwrap();
            let rhs = partial(&p, j).unwrap().mul(&one_tensor(n, &q, false))
                .add(&one_tensor(n, &p, true).mul(&partial(&q, j).unwrap()));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn coassociativity((n, p) in arity_poly(6)) {
        for i in 1..=n {
            for j in 1..=n {
                let left = partial_left(&partial(&p, j).unwrap(), i).unwrap();
                let right = partial_right(&partial(&p, i).unwrap(), j).unwrap();
                prop_assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn cyclic_is_flipped_multiplication((n, p) in arity_poly(6)) {
        for j in 1..=n {
            prop_assert_eq!(cyclic(&p, j).unwrap(), partial(&p, j).unwrap().flip().multiply());
        }
    }

    #[test]
    fn number_operator_from_partials((n, p) in arity_poly(6)) {
        let mut sum = NCPoly::zero(n);
        for j in 1..=n {
            sum = sum.add(&sharp(&partial(&p, j).unwrap(), &NCPoly::var(n, j).unwrap()));
        }
        prop_assert_eq!(number_op(&p), sum);
    }

    #[test]
    fn symmetrize_is_idempotent((n, p) in arity_poly(5)) {
        let p = p.sub(&NCPoly::constant(n, p.constant_term()));
        let s = symmetrize(&p).unwrap();
        prop_assert_eq!(symmetrize(&s).unwrap(), s.clone());
        // cyclic derivatives only see the cyclic class
        for j in 1..=n {
            prop_assert_eq!(cyclic(&s, j).unwrap(), cyclic(&p, j).unwrap());
        }
    }

    #[test]
    fn jacobian_chain_rule((p, q) in (1usize..=2).prop_flat_map(|n| (
        prop::collection::vec(poly_strategy(n, 3), n),
        prop::collection::vec(poly_strategy(n, 2), n),
    ))) {
        let composed: Vec<NCPoly> = p.iter().map(|pi| substitute(pi, &q).unwrap()).collect();
        let lhs = jacobian(&composed).unwrap();
        let rhs = jacobian(&p).unwrap().substitute(&q).unwrap().sharp(&jacobian(&q).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn wick_trace_property(v in word_strategy(3, 4), w in word_strategy(3, 4)) {
        let c = CovarianceMatrix::new(vec![
            vec![rat(2, 1), rat(1, 2), rat(0, 1)],
            vec![rat(1, 2), rat(1, 1), rat(1, 3)],
            vec![rat(0, 1), rat(1, 3), rat(3, 2)],
        ]).unwrap();
        let a = semicircular_moment(&c, &v.concat(&w)).unwrap();
        let b = semicircular_moment(&c, &w.concat(&v)).unwrap();
        prop_assert_eq!(a.clone(), b);
        if (v.len() + w.len()) % 2 == 1 {
            prop_assert!(a.is_zero());
        }
    }

    #[test]
    fn schwinger_dyson_on_random_tuples(p in prop::collection::vec(poly_strategy(3, 6), 3)) {
        prop_assert!(sd_residual_nc(&p, 6).unwrap().is_zero());
    }

    #[test]
    fn norm_is_submultiplicative((_, p, q) in arity_pair(3), r in 1i64..=6) {
        let r = rat(r, 2);
        let lhs = norm_r(&p.mul(&q), &r).unwrap();
        prop_assert!(lhs <= norm_r(&p, &r).unwrap() * norm_r(&q, &r).unwrap());
    }

    #[test]
    fn cumulant_roundtrip(m in prop::collection::vec((-9i64..=9, 1i64..=5), 8)) {
        let m: Vec<Q> = m.into_iter().map(|(a, b)| rat(a, b)).collect();
        prop_assert_eq!(cumulants_to_moments(&moments_to_cumulants(&m)), m);
    }

    #[test]
    fn clt_scales_cumulants(k in prop::collection::vec((-9i64..=9, 1i64..=5), 4), n in prop::sample::select(vec![1u32, 4, 9, 16])) {
        let kappa: Vec<Q> = std::iter::once(Q::zero())
            .chain(k.into_iter().map(|(a, b)| rat(a, b)))
            .collect();
        let m = cumulants_to_moments(&kappa);
        let scaled = moments_to_cumulants(&normalized_sum_moments(&m, n).unwrap());
        for (idx, (got, orig)) in scaled.iter().zip(&kappa).enumerate() {
            let order = idx as i32 + 1;
            // n^{1 - m/2} is rational whenever n is a perfect square
            let root = (n as f64).sqrt() as i64;
            let factor = Q::from_integer(root.into()).pow(2 - order);
            prop_assert_eq!(got.clone(), orig * factor);
        }
    }
}

fn w(letters: &[usize]) -> Word {
    Word(letters.to_vec())
}

#[test]
fn leibniz_example() {
    let p = NCPoly::monomial(2, w(&[1, 2])).unwrap();
    let q = NCPoly::var(2, 1).unwrap();
    let expected = NCTensor::from_terms(2, [((w(&[]), w(&[2, 1])), Q::one()), ((w(&[1, 2]), w(&[])), Q::one())]);
    assert_eq!(partial(&p.mul(&q), 1).unwrap(), expected);
}

#[test]
fn errors_carry_kinds() {
    let p = NCPoly::var(2, 1).unwrap();
    assert_eq!(partial(&p, 3).unwrap_err().kind(), "IndexOutOfArity");
    assert_eq!(jacobian(std::slice::from_ref(&p)).unwrap_err().kind(), "ArityMismatch");
    assert_eq!(symmetrize(&NCPoly::one(2)).unwrap_err().kind(), "ConstantTermInSymmetrize");
    let bad = CovarianceMatrix::new(vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(1, 1)]]);
    assert_eq!(bad.unwrap_err().kind(), "NotPositiveDefinite");
}

#[test]
fn quadratic_potential_gradients() {
    let k = CovarianceMatrix::new(vec![vec![rat(1, 1), rat(1, 4)], vec![rat(1, 4), rat(1, 1)]]).unwrap();
    let u = quadratic_potential(&k);
    let d1 = cyclic(&u, 1).unwrap();
    assert_eq!(d1, NCPoly::from_terms(2, [(w(&[1]), rat(1, 1)), (w(&[2]), rat(1, 4))]).unwrap());
    let r = quadratic_stein_check(&k, 4).unwrap();
    assert!(r.pass(), "{r:?}");
    let ident = quadratic_stein_check(&CovarianceMatrix::identity(3), 4).unwrap();
    assert!(ident.pass());
    assert_eq!(ident.monomials_checked, 121);
}

#[test]
fn identity_jacobian_and_sharp() {
    let vars: Vec<NCPoly> = (1..=3).map(|i| NCPoly::var(3, i).unwrap()).collect();
    let j = jacobian(&vars).unwrap();
    assert_eq!(j, NCMatrix::from_scalars(&CovarianceMatrix::identity(3), 3));
    let t = NCTensor::simple(&vars[0], &vars[1]);
    assert_eq!(sharp(&t, &vars[2]), NCPoly::monomial(3, w(&[1, 3, 2])).unwrap());
    let sub = substitute(&NCPoly::monomial(2, w(&[1, 2])).unwrap(), &[vars[2].clone(), vars[0].clone()]);
    assert_eq!(sub.unwrap(), NCPoly::monomial(3, w(&[3, 1])).unwrap());
    let short = substitute(&NCPoly::monomial(2, w(&[1, 2])).unwrap(), &[vars[0].clone()]);
    assert_eq!(short.unwrap_err().kind(), "ArityMismatch");
}

#[test]
fn sd_examples() {
    let cube = NCPoly::monomial(1, w(&[1, 1, 1])).unwrap();
    assert!(sd_residual_nc(&[cube], 8).unwrap().is_zero());
    let cross = vec![NCPoly::var(2, 2).unwrap(), NCPoly::zero(2)];
    assert!(sd_residual_nc(&cross, 8).unwrap().is_zero());
}

#[test]
fn catalan_moments_single_variable() {
    let id = CovarianceMatrix::identity(1);
    let catalan = [1, 1, 2, 5, 14, 42, 132];
    for (m, c) in catalan.iter().enumerate() {
        assert_eq!(semicircular_moment(&id, &Word(vec![1; 2 * m])).unwrap(), rat(*c, 1));
        assert!(semicircular_moment(&id, &Word(vec![1; 2 * m + 1])).unwrap().is_zero());
    }
}
