//! Property tests: printer/parser round trip, jet linearity, and the
//! projection/complement invariants of the linear algebra layer.

use metallic_core::exprdsl::{eval_jet2, parse, ConstMap, Expr, UnaryFn};
use metallic_core::numlin::{complement, dot, gram_schmidt, norm};
use proptest::prelude::*;

const VARS: [&str; 3] = ["u", "v", "w"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-100i32..100).prop_map(|n| Expr::num(n as f64)),
        (-4.0..4.0f64).prop_map(Expr::num),
        (0usize..3).prop_map(|i| Expr::var(i, VARS[i])),
        Just(Expr::constant("sigma")),
        Just(Expr::constant("sigma_bar")),
        Just(Expr::constant("pi")),
    ]
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 64, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(metallic_core::exprdsl::BinOp::Sub, a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Bin(metallic_core::exprdsl::BinOp::Div, a.into(), b.into())),
            // constant exponent only; the grammar rejects variable exponents
            (inner.clone(), prop_oneof![Just(2.0), Just(3.0), Just(-2.0), Just(0.5)])
                .prop_map(|(a, e)| Expr::Bin(
                    metallic_core::exprdsl::BinOp::Pow,
                    a.into(),
                    Box::new(Expr::num(e))
                )),
            inner.clone().prop_map(|a| a.neg()),
            inner.clone().prop_map(|a| Expr::Unary(UnaryFn::Sin, a.into())),
            inner.clone().prop_map(|a| Expr::Unary(UnaryFn::Sqrt, a.into())),
            inner.prop_map(|a| Expr::Unary(UnaryFn::Abs, a.into())),
        ]
    })
}

proptest! {
    /// parse(print(ast)) reproduces the tree node for node.
    #[test]
    fn print_parse_roundtrip(e in expr_strategy()) {
        let printed = e.to_string();
        let reparsed = parse(&printed, &VARS, &[]).unwrap_or_else(|err| {
            panic!("printed form `{printed}` failed to parse: {err}")
        });
        prop_assert_eq!(e, reparsed);
    }

    /// Jet evaluation is linear: eval(a + b) equals eval(a) + eval(b)
    /// componentwise, exactly.
    #[test]
    fn jet_sum_rule_exact(
        a in expr_strategy(),
        b in expr_strategy(),
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
        z in -1.0..1.0f64,
    ) {
        let mut consts = ConstMap::new();
        consts.insert("sigma".into(), 1.618033988749895);
        consts.insert("sigma_bar".into(), -0.618033988749895);
        let point = [x, y, z];
        let sum = a.clone().add(b.clone());
        let (ja, jb, js) = (
            eval_jet2(&a, &point, &consts),
            eval_jet2(&b, &point, &consts),
            eval_jet2(&sum, &point, &consts),
        );
        if let (Ok(ja), Ok(jb), Ok(js)) = (ja, jb, js) {
            prop_assert_eq!(ja.add(&jb), js);
        }
    }

    /// Projection onto a random subspace is idempotent and self-adjoint.
    #[test]
    fn projection_invariants(
        raw in proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, 5), 1..4),
        u in proptest::collection::vec(-2.0..2.0f64, 5),
        v in proptest::collection::vec(-2.0..2.0f64, 5),
    ) {
        let s = gram_schmidt(&raw, 1e-10);
        let pu = s.project(&u);
        let ppu = s.project(&pu);
        for (a, b) in pu.iter().zip(&ppu) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((dot(&s.project(&u), &v) - dot(&u, &s.project(&v))).abs() < 1e-12);
    }

    /// A subspace basis together with its complement is an orthonormal basis
    /// of the ambient space.
    #[test]
    fn complement_completes_the_basis(
        raw in proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, 4), 1..4),
    ) {
        let s = gram_schmidt(&raw, 1e-10);
        let c = complement(&s);
        prop_assert_eq!(s.rank() + c.rank(), 4);
        let mut all: Vec<Vec<f64>> = s.basis().to_vec();
        all.extend(c.basis().iter().cloned());
        for i in 0..all.len() {
            for j in 0..all.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(&all[i], &all[j]) - want).abs() < 1e-10);
            }
        }
        let _ = norm(&all[0]);
    }
}
