//! Property tests for the geometries, the Spin(7) algebra and the gauge residuals.

use coframe_core::algebra::{j_relation_defect, pi221, pi27, pi47_norm, OrthoFrame};
use coframe_core::catalog::{cayley_form, instantiate, Check, Equation, Payload, Cayley};
use coframe_core::exterior::{wedge, Form};
use coframe_core::gauge::{curvature, residual_dhym, residual_spin7, ConnectionAnsatz};
use coframe_core::geometries::{calabi, eguchi_hanson, spin7_from_triple};
use coframe_core::homogeneous::{invariant_two_forms, Space};
use coframe_core::scalar::{PHASE_COS, PHASE_SIN};
use coframe_core::{Expr, Geometry, ParamEnv};
use nalgebra::DVector;
use proptest::prelude::*;

fn coeff_expr() -> impl Strategy<Value = Expr> {
    (-3i64..=3, 1i64..=3, 0i64..=2, 1i64..=2).prop_map(|(a, b, p, s)| {
        // a/b · r^{±p} · (r² + s)^{1/2}
        let base = Expr::rat(a, b) * Expr::r().powi(if a % 2 == 0 { p } else { -p });
        base * (Expr::r().powi(2) + Expr::int(s)).sqrt()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cone_forms_are_homogeneous(lambda in 1.1f64..4.0, r in 0.3f64..3.0, which in 0usize..2) {
        let g = if which == 0 { calabi(0.0) } else { eguchi_hanson(0.0) };
        let radial = g.coframe.radial().expect("cone has a radial direction");
        for name in g.form_names() {
            let f = g.form(name).unwrap();
            let at = f.eval_terms(r, &g.params).unwrap();
            let scaled = f.eval_terms(lambda * r, &g.params).unwrap();
            for ((m, x), (_, y)) in at.iter().zip(&scaled) {
                let weight = f.degree() as i32 - i32::from(m & (1 << radial) != 0);
                let expect = x * lambda.powi(weight);
                prop_assert!((y - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{name}");
            }
        }
    }

    #[test]
    fn complex_structures_satisfy_defining_relation(
        xs in prop::collection::vec(-2.0f64..2.0, 8), i in 1usize..=3, r in 1.5f64..6.0, eight in any::<bool>(),
    ) {
        let g = if eight { calabi(1.0) } else { eguchi_hanson(1.0) };
        let n = g.frame.len();
        let x = DVector::from_iterator(n, xs.into_iter().take(n));
        prop_assert!(j_relation_defect(&g, i, &x, r, &g.params).unwrap() <= 1e-10);
    }

    #[test]
    fn pi27_is_a_projection(coeffs in prop::collection::vec(-1.0f64..1.0, 10), i in 1usize..=3, r in 1.5f64..4.0) {
        let g = calabi(1.0);
        let forms = invariant_two_forms(Space::Tcp2);
        let mut beta = Form::zero(&g.coframe, 2);
        for (f, c) in forms.iter().zip(&coeffs) {
            let q = coframe_core::Rational::new((c * 1000.0).round() as i64, 1000);
            beta = beta.add(&f.scale_q(q));
        }
        let phi = spin7_from_triple(&g, i).unwrap();
        let p = pi27(&beta, &phi, &g).unwrap();
        let pp = pi27(&p, &phi, &g).unwrap();
        let comp = pi221(&beta, &phi, &g).unwrap();
        let fr = OrthoFrame::at(&g, r, &g.params).unwrap();
        let pt = |f: &Form| fr.to_pointwise(f, &g, r, &g.params).unwrap();
        prop_assert!(pt(&pp).sub(&pt(&p)).sup() <= 1e-12);
        prop_assert!(pt(&p).add(&pt(&comp)).sub(&pt(&beta)).sup() <= 1e-12);
    }

    #[test]
    fn formal_residuals_match_closed_ones(
        c1 in coeff_expr(), c2 in coeff_expr(), c3 in coeff_expr(), k in -2.0f64..2.0,
        i in 1usize..=3, theta in -1.4f64..1.4, r in 1.5f64..5.0,
    ) {
        let g = calabi(1.0);
        let closed = ConnectionAnsatz::closed(&g, vec![
            ("θ1", Expr::param("k")), ("θ2", c1), ("θ3", c2), ("θ4", c3),
        ]).unwrap();
        let formal = ConnectionAnsatz::formal(&g);
        let env = ParamEnv::new().with("k", k).with_phase(theta);
        let phase = (&Expr::param(PHASE_SIN), &Expr::param(PHASE_COS));
        let phi = spin7_from_triple(&g, i).unwrap();
        let pairs = [
            (residual_dhym(&closed, &g, i, phase).unwrap().form, residual_dhym(&formal, &g, i, phase).unwrap().form),
            (residual_spin7(&closed, &phi, &g).unwrap().form, residual_spin7(&formal, &phi, &g).unwrap().form),
        ];
        let e = g.params.merged(&env);
        let b = closed.formal_bindings(&g, r, &env).unwrap();
        for (fc, ff) in pairs {
            let vc = fc.eval_terms(r, &e).unwrap();
            let vf = ff.eval_terms(r, &b).unwrap();
            let size = vc.iter().fold(1.0f64, |m, (_, x)| m.max(x.abs()));
            for (m, x) in &vc {
                let y = vf.iter().find(|(m2, _)| m2 == m).map(|(_, y)| *y).unwrap_or(0.0);
                prop_assert!((x - y).abs() <= 1e-11 * size);
            }
            for (m, y) in &vf {
                if !vc.iter().any(|(m2, _)| m2 == m) {
                    prop_assert!(y.abs() <= 1e-11 * size);
                }
            }
        }
    }

    #[test]
    fn spin7_instantons_satisfy_the_quadratic_condition(
        pick in 0usize..5, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, c3 in -1.0f64..1.0,
        k in -2.0f64..2.0, c in 0.5f64..2.0,
    ) {
        let id = ["tcp2_spin7_1", "tcp2_spin7_2", "tcp2_spin7_3", "cone_bs_spin7", "cone_hk_spin7"][pick];
        let params = ParamEnv::new()
            .with("c", c).with("k", k)
            .with("C1", c1).with("C2", c2).with("C3", c3).with("C4", c1 * c2);
        let fam = instantiate(id, &params).unwrap();
        let Equation::Spin7(cay) = fam.equation else { panic!("{id} is not a Spin(7) family") };
        let Payload::Closed(a) = &fam.payload else { panic!("{id} is not closed") };
        let g: &Geometry = &fam.geometry;
        let env = fam.full_env();
        let f = curvature(a);
        let ff = wedge(&f, &f).unwrap();
        let phi = cayley_form(g, cay).unwrap();
        for r in g.sample_radii(8, 10.0) {
            // relative to the size of F∧F, as for every residual
            let size = OrthoFrame::at(g, r, &env).unwrap().to_pointwise(&ff, g, r, &env).unwrap().norm();
            prop_assert!(pi47_norm(&ff, &phi, g, r, &env).unwrap() <= 1e-10 * (1.0 + size), "{id} at r = {r}");
        }
    }

    #[test]
    fn traceless_hym_is_spin7_for_the_other_two(c0 in -2.0f64..2.0, k in -2.0f64..2.0, c in 0.5f64..2.0) {
        // traceless ω1-HYM ⇒ Spin(7) for Φ2 and Φ3
        let fam = instantiate("tcp2_hym_1", &ParamEnv::new().with("lambda", 0.0).with("C0", c0).with("k", k).with("c", c)).unwrap();
        let Payload::Closed(a) = &fam.payload else { unreachable!() };
        let env = fam.full_env();
        for j in [2, 3] {
            let chk = Check::build(Equation::Spin7(Cayley::Triple(j)), a, &fam.geometry).unwrap();
            for r in fam.geometry.sample_radii(8, 10.0) {
                prop_assert!(chk.eval(&fam.geometry, r, &env).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn spin7_for_two_structures_is_traceless_hym(
        c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, c3 in -1.0f64..1.0, k in -2.0f64..2.0, zero in 0usize..4,
    ) {
        // Φ2-instantons that are also Φ3-instantons are exactly the traceless ω1-HYM ones
        let mut cs = [c1, c2, c3];
        match zero {
            0 | 1 => cs[zero + 1] = 0.0,
            2 => cs[1..].fill(0.0),
            _ => {}
        }
        let fam = instantiate("tcp2_spin7_2", &ParamEnv::new().with("k", k).with("C1", cs[0]).with("C2", cs[1]).with("C3", cs[2])).unwrap();
        let Payload::Closed(a) = &fam.payload else { unreachable!() };
        let env = fam.full_env().with("lambda", 0.0);
        let g = &fam.geometry;
        let phi3 = Check::build(Equation::Spin7(Cayley::Triple(3)), a, g).unwrap();
        let hym1: Vec<Check> = Equation::Hym(1).components(g).into_iter().map(|e| Check::build(e, a, g).unwrap()).collect();
        let mut worst = (0.0f64, 0.0f64);
        for r in g.sample_radii(8, 10.0) {
            worst.0 = worst.0.max(phi3.eval(g, r, &env).unwrap());
            for chk in &hym1 {
                worst.1 = worst.1.max(chk.eval(g, r, &env).unwrap());
            }
        }
        prop_assert_eq!(worst.0 <= 1e-9, worst.1 <= 1e-9, "Φ3 {:e} vs traceless HYM {:e}", worst.0, worst.1);
    }
}
