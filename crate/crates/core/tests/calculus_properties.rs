//! Property tests for expressions, forms and the Lie-algebra tables.

use coframe_core::exterior::{contract, d, hodge, inner, multi_indices, multi_indices_within, wedge};
use coframe_core::geometries::{calabi, eguchi_hanson, flag_ke};
use coframe_core::homogeneous::{invariant_two_forms, su2_coframe, su3_coframe, Space};
use coframe_core::scalar::{lambert_w0, q};
use coframe_core::{Coframe, Expr, Form, Geometry, ParamEnv};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn leaf() -> BoxedStrategy<Expr> {
    prop_oneof![
        (1i64..=4).prop_map(Expr::int),
        (1i64..=4, 2i64..=5).prop_map(|(n, d)| Expr::rat(n, d)),
        Just(Expr::r()),
        Just(Expr::param("c")),
    ]
    .boxed()
}

/// Random expression trees that stay finite for `r > 0`, `c > 0`.
fn expr(depth: u32) -> BoxedStrategy<Expr> {
    leaf()
        .prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                inner.clone().prop_map(|a| a.powi(2)),
                inner.clone().prop_map(|a| (a.powi(2) + Expr::one()).sqrt()),
                inner.clone().prop_map(|a| (a.powi(2) + Expr::one()).recip()),
                inner.clone().prop_map(|a| (a.powi(2) + Expr::one()).pow(q(1, 3))),
                inner.clone().prop_map(|a| a.powi(2).lambert_w0()),
            ]
        })
        .boxed()
}

fn env(c: f64) -> ParamEnv {
    ParamEnv::new().with("c", c)
}

/// Random form of the given degree with at most four monomials inside `within`.
fn random_form(cf: &Coframe, within: Option<coframe_core::exterior::Mask>, degree: usize, picks: &[(usize, Expr)]) -> Form {
    let masks = match within {
        Some(m) => multi_indices_within(m, degree),
        None => multi_indices(cf.dim(), degree),
    };
    let mut f = Form::zero(cf, degree);
    for (ix, e) in picks {
        let m = masks[ix % masks.len()];
        let labels: Vec<String> = (0..cf.dim()).filter(|a| m & (1 << a) != 0).map(|a| cf.labels()[a].clone()).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        f = f.add(&Form::mono(cf, e.clone(), &refs));
    }
    f
}

fn picks(depth: u32) -> impl Strategy<Value = Vec<(usize, Expr)>> {
    prop::collection::vec((0usize..1000, expr(depth)), 1..=4)
}

/// A geometry with `c` bound in its parameters.
fn metric_geometry(which: usize) -> Geometry {
    let mut g = match which {
        0 => eguchi_hanson(1.0),
        1 => flag_ke(),
        _ => calabi(1.0),
    };
    g.params = env(1.0).merged(&g.params);
    g
}

fn sample_r(g: &Geometry, t: f64) -> f64 {
    let lo = g.domain_min_value().max(0.5) * 1.05;
    lo + t * (4.0 - lo).max(0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_central_difference(e in expr(3), r in 0.3f64..6.0, c in 0.5f64..2.0) {
        let env = env(c);
        let h = 1e-6 * r.max(1.0);
        let f0 = e.eval(r, &env).unwrap();
        let fd = (e.eval(r + h, &env).unwrap() - e.eval(r - h, &env).unwrap()) / (2.0 * h);
        let de = e.deriv().eval(r, &env).unwrap();
        prop_assert!((de - fd).abs() <= 1e-6 * (1.0 + f0.abs() + de.abs()), "{e}: {de} vs {fd}");
    }

    #[test]
    fn lambert_round_trip(exp in -12.0f64..10.0, zero in prop::bool::weighted(0.05)) {
        let x = if zero { 0.0 } else { 10f64.powf(exp) };
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-13 * (1.0 + x));
    }

    #[test]
    fn second_derivative_ignores_construction_order(
        a in expr(2), b in expr(2), e in expr(2), r in 0.5f64..4.0, c in 0.5f64..2.0,
    ) {
        let env = env(c);
        let s1 = Expr::sum(vec![a.clone(), b.clone(), e.clone()]).deriv().deriv().eval(r, &env).unwrap();
        let s2 = Expr::sum(vec![e.clone(), a.clone(), b.clone()]).deriv().deriv().eval(r, &env).unwrap();
        let p1 = Expr::product(vec![a.clone(), b.clone(), e.clone()]).deriv().deriv().eval(r, &env).unwrap();
        let p2 = Expr::product(vec![b, e, a]).deriv().deriv().eval(r, &env).unwrap();
        prop_assert!((s1 - s2).abs() <= 1e-12 * (1.0 + s1.abs()));
        prop_assert!((p1 - p2).abs() <= 1e-12 * (1.0 + p1.abs()));
    }

    #[test]
    fn d_squared_vanishes_on_random_forms(
        degree in 0usize..=4, terms in picks(2), su3 in any::<bool>(), r in 0.5f64..3.0,
    ) {
        let cf = if su3 { su3_coframe(true) } else { su2_coframe() };
        let degree = degree.min(cf.dim() - 2);
        let f = random_form(&cf, None, degree, &terms);
        let env = env(1.3);
        let dd = d(&d(&f));
        for j in 0..10 {
            let rr = r * (1.0 + 0.1 * j as f64);
            prop_assert!(dd.sup_norm(rr, &env).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn leibniz_rule(p in 0usize..=2, q_ in 0usize..=2, ta in picks(1), tb in picks(1), r in 0.5f64..3.0) {
        let cf = su3_coframe(true);
        let a = random_form(&cf, None, p, &ta);
        let b = random_form(&cf, None, q_, &tb);
        let lhs = d(&wedge(&a, &b).unwrap());
        let mut rhs = wedge(&d(&a), &b).unwrap();
        let second = wedge(&a, &d(&b)).unwrap();
        rhs = if p % 2 == 0 { rhs.add(&second) } else { rhs.sub(&second) };
        let env = env(0.7);
        let diff = lhs.sub(&rhs);
        prop_assert!(diff.sup_norm(r, &env).unwrap() <= 1e-12 * (1.0 + lhs.magnitude_norm(r, &env).unwrap()));
    }

    #[test]
    fn hodge_star_is_an_involution_on_even_forms(which in 0usize..3, half in 0usize..=2, terms in picks(1), t in 0.0f64..1.0) {
        let g = metric_geometry(which);
        let degree = (2 * half).min(g.metric.dim());
        let a = random_form(&g.coframe, Some(g.metric.mask()), degree, &terms);
        let ss = hodge(&hodge(&a, &g.metric).unwrap(), &g.metric).unwrap();
        let r = sample_r(&g, t);
        prop_assert!(ss.sub(&a).sup_norm(r, &g.params).unwrap() <= 1e-12 * (1.0 + a.magnitude_norm(r, &g.params).unwrap()));
    }

    #[test]
    fn inner_product_is_positive(which in 0usize..3, degree in 1usize..=3, terms in picks(1), t in 0.0f64..1.0) {
        let g = metric_geometry(which);
        let a = random_form(&g.coframe, Some(g.metric.mask()), degree, &terms);
        let r = sample_r(&g, t);
        if a.sup_norm(r, &g.params).unwrap() > 1e-9 {
            prop_assert!(inner(&a, &a, &g.metric, r, &g.params).unwrap() > 0.0);
        }
    }

    #[test]
    fn contraction_is_an_antiderivation(
        which in 0usize..3, p in 1usize..=2, q_ in 1usize..=2, slot in 0usize..8,
        ta in picks(1), tb in picks(1), t in 0.0f64..1.0,
    ) {
        let g = metric_geometry(which);
        let idx = g.metric.indices();
        let label = g.coframe.labels()[idx[slot % idx.len()]].clone();
        let a = random_form(&g.coframe, Some(g.metric.mask()), p, &ta);
        let b = random_form(&g.coframe, Some(g.metric.mask()), q_, &tb);
        let lhs = contract(&label, &wedge(&a, &b).unwrap(), &g.metric).unwrap();
        let first = wedge(&contract(&label, &a, &g.metric).unwrap(), &b).unwrap();
        let second = wedge(&a, &contract(&label, &b, &g.metric).unwrap()).unwrap();
        let rhs = if p % 2 == 0 { first.add(&second) } else { first.sub(&second) };
        let r = sample_r(&g, t);
        prop_assert!(lhs.sub(&rhs).sup_norm(r, &g.params).unwrap() <= 1e-12 * (1.0 + lhs.magnitude_norm(r, &g.params).unwrap()));
    }

    #[test]
    fn exterior_derivative_preserves_invariance(coeffs in prop::collection::vec((-3i64..=3, expr(1)), 10), r in 0.5f64..4.0) {
        let forms = invariant_two_forms(Space::Tcp2);
        let cf = forms[0].coframe().clone();
        let mut beta = Form::zero(&cf, 2);
        for (f, (n, e)) in forms.iter().zip(&coeffs) {
            beta = beta.add(&f.scale(&(Expr::int(*n) * e)));
        }
        // horizontal and isotropy-invariant: no θ1 leg in dβ
        let db = d(&beta);
        let t1 = cf.ix("θ1");
        let env = env(1.1);
        for (m, v) in db.eval_terms(r, &env).unwrap() {
            if m & (1 << t1) != 0 {
                prop_assert!(v.abs() <= 1e-12, "dβ has a θ1 leg");
            }
        }
    }

    #[test]
    fn invariant_two_forms_are_independent(t in 0.0f64..1.0) {
        let g = calabi(1.0);
        let r = sample_r(&g, t) + 0.01;
        let forms = invariant_two_forms(Space::Tcp2);
        let n = forms.len();
        let gram = DMatrix::from_fn(n, n, |i, j| inner(&forms[i], &forms[j], &g.metric, r, &g.params).unwrap());
        let diag: f64 = (0..n).map(|i| gram[(i, i)]).product();
        let det = gram.determinant();
        prop_assert!(det > 0.0 && det / diag > 1e-8, "det {det}, normalized {}", det / diag);
    }
}
