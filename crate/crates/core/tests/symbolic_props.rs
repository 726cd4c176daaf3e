use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use sigmak::solution::{cancellation_coefficient, derive_constants, SolutionParams};
use sigmak::symbolic::{
    build_rotated_hessian, rotated_hessian_with, sym_det, sym_sigma_k, verify_exact,
    verify_exact_params, SymExpr, SymMatrix,
};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn expr_strategy() -> impl Strategy<Value = SymExpr> {
    prop::collection::vec((-9i64..=9, 1i64..=5, 0u32..=3, -3i32..=3), 0..5).prop_map(|terms| {
        terms
            .into_iter()
            .fold(SymExpr::zero(), |acc, (n, d, a, b)| {
                &acc + &SymExpr::term(q(n, d), a, b)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ring_laws(x in expr_strategy(), y in expr_strategy(), z in expr_strategy()) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&x * &SymExpr::one(), x.clone());
        prop_assert!((&x - &x).is_zero());
        prop_assert!((&x * &SymExpr::zero()).is_zero());
        prop_assert_eq!(-&(-&x), x.clone());
    }

    /// Float evaluation agrees with exact evaluation at rational `r` and
    /// `E = eᵗ`.
    #[test]
    fn float_and_exact_evaluation_agree(x in expr_strategy(), rn in -8i64..=8, en in 1i64..=12) {
        let r = q(rn, 4);
        let e = q(en, 4);
        let t = (en as f64 / 4.0).ln();
        let exact = x.eval_exact(&r, &e);
        let exact_f: f64 = num_traits::ToPrimitive::to_f64(&exact).unwrap();
        let float = x.eval_f64(rn as f64 / 4.0, t);
        let scale: f64 = x
            .terms()
            .map(|(m, c)| {
                num_traits::ToPrimitive::to_f64(c).unwrap().abs()
                    * (rn as f64 / 4.0).abs().powi(m.a as i32)
                    * (en as f64 / 4.0).powi(m.b)
            })
            .sum();
        prop_assert!((exact_f - float).abs() <= 1e-12 * (1.0 + scale), "{exact_f} vs {float}");
    }
}

#[test]
fn determinant_of_a_known_matrix() {
    // [[2E, 2rE], [2rE, r²E + c]] has determinant 2cE − 2r²E².
    let c = SymExpr::constant(q(3, 2));
    let m = SymMatrix::new(
        2,
        vec![
            SymExpr::int_term(2, 0, 1),
            SymExpr::int_term(2, 1, 1),
            SymExpr::int_term(2, 1, 1),
            &SymExpr::int_term(1, 2, 1) + &c,
        ],
    )
    .unwrap();
    let expected = &SymExpr::int_term(3, 0, 1) + &SymExpr::int_term(-2, 2, 2);
    assert_eq!(sym_det(&m).unwrap(), expected);
}

#[test]
fn partition_is_complete_with_expected_class_sizes() {
    let c = |n: u64, k: u64| num_integer::binomial(n, k);
    for n in [3usize, 5, 7, 9] {
        let k = n.div_ceil(2);
        let e = sym_sigma_k(&build_rotated_hessian(n).unwrap(), k).unwrap();
        let (nn, kk) = (n as u64, k as u64);
        assert_eq!(
            e.class_sizes,
            [c(nn - 2, kk - 2), c(nn - 2, kk - 1), c(nn - 1, kk)]
        );
        assert_eq!(e.class_sizes.iter().sum::<u64>(), c(nn, kk));
        assert_eq!(e.total, &(&e.both + &e.last_only) + &e.without_last);
        assert!(e.total.is_one(), "n={n}: {}", e.total);
    }
}

/// With `h'' = 0` the only `r²` term in `σ_k` is
/// `2^{k−1}·[C(n−2,k−1) − C(n−2,k−2)]·r²e^{kt}`, which vanishes exactly when
/// `2k = n + 1`.
#[test]
fn r_squared_term_vanishes_iff_2k_eq_n_plus_1() {
    for n in 3..=8usize {
        let m = rotated_hessian_with(n, &SymExpr::zero()).unwrap();
        for k in 2..n {
            let sigma = sym_sigma_k(&m, k).unwrap().total;
            let r2 = sigma.r_power_part(2);
            let expected =
                (1i64 << (k - 1)) * cancellation_coefficient(n as i64, k as i64).unwrap();
            assert_eq!(r2, SymExpr::int_term(expected, 2, k as i32), "n={n} k={k}");
            assert_eq!(r2.is_zero(), 2 * k == n + 1, "n={n} k={k}");
        }
    }
}

#[test]
fn certification_covers_odd_n_up_to_nine() {
    for n in [3, 5, 7, 9] {
        let c = verify_exact(n).unwrap();
        assert!(c.ok, "n={n}: residual {}", c.residual_expr);
        assert!(c.residual_expr.is_empty());
        assert_eq!(c.k, n.div_ceil(2));
    }
    for n in [1, 2, 4, 11] {
        assert!(
            matches!(verify_exact(n), Err(sigmak::Error::Capability(_))),
            "n={n}"
        );
    }
}

#[test]
fn perturbed_constants_are_rejected() {
    for n in [3, 5, 7] {
        let p = derive_constants(n).unwrap();
        for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let a = &p.a + BigRational::from_integer(BigInt::from(da));
            let b = &p.b + BigRational::from_integer(BigInt::from(db));
            let bad = SolutionParams::with_constants(n, a, b).unwrap();
            let c = verify_exact_params(&bad).unwrap();
            assert!(!c.ok, "n={n} da={da} db={db}");
            assert!(!c.residual_expr.is_zero());
        }
    }
}

#[test]
fn certification_serializes_terms() {
    let p = derive_constants(3).unwrap();
    let bad = SolutionParams::with_constants(3, &p.a + q(1, 1), p.b.clone()).unwrap();
    let c = verify_exact_params(&bad).unwrap();
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["ok"], false);
    let terms = json["residual_expr"].as_array().unwrap();
    assert!(!terms.is_empty());
    for t in terms {
        assert!(t["coeff"].is_string());
        assert!(t["r_power"].is_u64());
        assert!(t["exp_t"].is_i64());
    }
}
