//! Invariant abelian connections, their curvature and instanton residuals.

use crate::algebra::{pi27, pi47_norm};
use crate::error::{Error, Result};
use crate::exterior::{d, hodge, wedge, wedge_power, Form};
use crate::geometries::{Geometry, GeometryKind};
use crate::scalar::{formal_key, q, Expr, ParamEnv, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Coefficients are concrete expressions in `r` and parameters.
    Closed,
    /// Coefficients are formal symbols `a2, a2', …`.
    Formal,
}

/// `A = Σ c_label · e^label` on the labels allowed by the geometry.
#[derive(Debug, Clone)]
pub struct ConnectionAnsatz {
    pub geometry_id: String,
    pub mode: Mode,
    coeffs: Vec<(String, Expr)>,
    form: Form,
}

/// Allowed labels and the slot name used for each in formal mode.
pub fn ansatz_slots(kind: GeometryKind) -> &'static [(&'static str, &'static str)] {
    match kind {
        GeometryKind::Calabi | GeometryKind::BryantSalamon => {
            &[("θ1", "k"), ("θ2", "a2"), ("θ3", "a3"), ("θ4", "a4")]
        }
        GeometryKind::EguchiHanson => &[("η1", "f1"), ("η2", "f2"), ("η3", "f3")],
        GeometryKind::FlagKe => &[("θ1", "a1"), ("θ3", "a3")],
    }
}

impl ConnectionAnsatz {
    /// Closed-mode ansatz from explicit coefficients.
    pub fn closed(g: &Geometry, coeffs: Vec<(&str, Expr)>) -> Result<ConnectionAnsatz> {
        let slots = ansatz_slots(g.kind);
        let mut form = Form::zero(&g.coframe, 1);
        let mut stored = Vec::new();
        for (label, e) in coeffs {
            if !slots.iter().any(|(l, _)| *l == label) {
                return Err(Error::BadParams(format!(
                    "label {label} is not allowed in the ansatz on {}",
                    g.id
                )));
            }
            form = form.add(&Form::mono(&g.coframe, e.clone(), &[label]));
            stored.push((label.to_string(), e));
        }
        Ok(ConnectionAnsatz {
            geometry_id: g.id.clone(),
            mode: Mode::Closed,
            coeffs: stored,
            form,
        })
    }

    /// Formal-mode ansatz: `kθ1 + a2θ2 + a3θ3 + a4θ4`, `Σ f_i η_i` or `a1θ1 + a3θ3`.
    /// `k` and the flag coefficients are parameters; radial functions are formal symbols.
    pub fn formal(g: &Geometry) -> ConnectionAnsatz {
        let radial = g.coframe.radial().is_some();
        let mut form = Form::zero(&g.coframe, 1);
        let mut stored = Vec::new();
        for (label, slot) in ansatz_slots(g.kind) {
            let e = if *slot == "k" || !radial {
                Expr::param(slot)
            } else {
                Expr::formal(slot)
            };
            form = form.add(&Form::mono(&g.coframe, e.clone(), &[label]));
            stored.push((label.to_string(), e));
        }
        ConnectionAnsatz {
            geometry_id: g.id.clone(),
            mode: Mode::Formal,
            coeffs: stored,
            form,
        }
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn coeffs(&self) -> &[(String, Expr)] {
        &self.coeffs
    }

    pub fn coeff(&self, label: &str) -> Expr {
        self.coeffs
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, e)| e.clone())
            .unwrap_or_else(Expr::zero)
    }

    /// Values of the formal slots (and their first two derivatives) taken from
    /// this closed ansatz at `r`, merged into `env`.
    pub fn formal_bindings(&self, g: &Geometry, r: f64, env: &ParamEnv) -> Result<ParamEnv> {
        let full = g.params.merged(env);
        let mut out = full.clone();
        let radial = g.coframe.radial().is_some();
        for (label, slot) in ansatz_slots(g.kind) {
            let c = self.coeff(label);
            if *slot == "k" || !radial {
                out.set(slot, c.eval(r, &full)?);
                continue;
            }
            let mut e = c;
            for order in 0..3 {
                out.set(&formal_key(slot, order), e.eval(r, &full)?);
                e = e.deriv();
            }
        }
        Ok(out)
    }
}

/// `F = dA`.
pub fn curvature(a: &ConnectionAnsatz) -> Form {
    d(a.form())
}

/// A residual form together with the constituent terms it was built from.
#[derive(Debug, Clone)]
pub struct Residual {
    pub form: Form,
    pub terms: Vec<Form>,
}

impl Residual {
    fn new(form: Form, terms: Vec<Form>) -> Residual {
        Residual { form, terms }
    }

    /// `sup|residual| / (1 + max term size)` at `r`; term size is the coefficient
    /// magnitude before cancellation, so symbolic cancellation inside a term
    /// does not count as a residual.
    pub fn relative(&self, r: f64, env: &ParamEnv) -> Result<f64> {
        let num = self.form.sup_norm(r, env)?;
        let mut den = 0.0f64;
        for t in &self.terms {
            den = den.max(t.magnitude_norm(r, env)?);
        }
        Ok(num / (1.0 + den))
    }
}

fn other_two(i: usize) -> Result<(usize, usize)> {
    match i {
        1 => Ok((2, 3)),
        2 => Ok((3, 1)),
        3 => Ok((1, 2)),
        _ => Err(Error::BadParams(format!("Kähler index {i} not in 1..=3"))),
    }
}

/// Real and imaginary parts of `F∧(ω_j + iω_k)^{n/2}`: `F∧(ω_j²−ω_k²)` and
/// `2F∧ω_j∧ω_k` in real dimension 8, `F∧ω_j` and `F∧ω_k` in dimension 4.
pub fn residual_holomorphic(a: &ConnectionAnsatz, g: &Geometry, i: usize) -> Result<(Residual, Residual)> {
    let w = g.triple()?;
    let (j, k) = other_two(i)?;
    let f = curvature(a);
    let wj = w[j - 1];
    let wk = w[k - 1];
    let m = g.n / 2;
    let mut re = Form::zero(&g.coframe, 2 + 2 * m);
    let mut im = re.clone();
    let (mut re_terms, mut im_terms) = (Vec::new(), Vec::new());
    for p in 0..=m {
        let a_pow = if p == m { None } else { Some(wedge_power(wj, m - p)?) };
        let b_pow = if p == 0 { None } else { Some(wedge_power(wk, p)?) };
        let prod = match (a_pow, b_pow) {
            (Some(x), Some(y)) => wedge(&x, &y)?,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => Form::scalar(&g.coframe, Expr::one()),
        };
        let sign = if (p / 2) % 2 == 0 { 1 } else { -1 };
        let t = wedge(&f, &prod)?.scale_q(Rational::from_integer(binomial(m, p) * sign));
        if p % 2 == 0 {
            re = re.add(&t);
            re_terms.push(t);
        } else {
            im = im.add(&t);
            im_terms.push(t);
        }
    }
    Ok((Residual::new(re, re_terms), Residual::new(im, im_terms)))
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, m| acc * (n - m) as i64 / (m as i64 + 1))
}

/// `cosθ·Im((ω+iF)ⁿ) − sinθ·Re((ω+iF)ⁿ)` with the phase given as `(sinθ, cosθ)` expressions.
pub fn residual_dhym(a: &ConnectionAnsatz, g: &Geometry, i: usize, phase: (&Expr, &Expr)) -> Result<Residual> {
    let w = g.kahler(i)?;
    let f = curvature(a);
    let n = g.n;
    let (sin, cos) = phase;
    let mut terms = Vec::new();
    let mut total = Form::zero(&g.coframe, 2 * n);
    for k in 0..=n {
        let wp = if k == n {
            Form::scalar(&g.coframe, Expr::one())
        } else {
            wedge_power(w, n - k)?
        };
        let fp = if k == 0 {
            Form::scalar(&g.coframe, Expr::one())
        } else {
            wedge_power(&f, k)?
        };
        let sign = if (k / 2) % 2 == 0 { 1 } else { -1 };
        let c = Rational::from_integer(binomial(n, k) * sign);
        let mono = wedge(&wp, &fp)?.scale_q(c);
        let t = if k % 2 == 1 { mono.scale(cos) } else { mono.scale(&-sin) };
        total = total.add(&t);
        terms.push(t);
    }
    Ok(Residual::new(total, terms))
}

/// `F∧ω_i^{n−1} − λ ω_iⁿ`.
pub fn residual_hym(a: &ConnectionAnsatz, g: &Geometry, i: usize, lambda: &Expr) -> Result<Residual> {
    let w = g.kahler(i)?;
    let f = curvature(a);
    let n = g.n;
    let lhs = if n == 1 { f } else { wedge(&f, &wedge_power(w, n - 1)?)? };
    let rhs = wedge_power(w, n)?.scale(lambda);
    Ok(Residual::new(lhs.sub(&rhs), vec![lhs, rhs]))
}

/// `π²₇(F) = ¼(F + ⋆(F∧Φ))`.
pub fn residual_spin7(a: &ConnectionAnsatz, phi: &Form, g: &Geometry) -> Result<Residual> {
    let f = curvature(a);
    let s = hodge(&wedge(&f, phi)?, &g.metric)?;
    let t1 = f.scale_q(q(1, 4));
    let t2 = s.scale_q(q(1, 4));
    Ok(Residual::new(t1.add(&t2), vec![t1, t2]))
}

/// The deformed Spin(7) pair: `F∧F` (whose Λ⁴₇ norm is the first equation)
/// and `π²₇(F − ⋆F³/6)`.
#[derive(Debug, Clone)]
pub struct Dspin7Residual {
    pub f_wedge_f: Form,
    pub second: Residual,
}

impl Dspin7Residual {
    /// `‖π⁴₇(F∧F)‖ / (1 + ‖F∧F‖)` at `r`, orthonormal-frame norms.
    pub fn first_relative(&self, phi: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<f64> {
        let p = pi47_norm(&self.f_wedge_f, phi, g, r, env)?;
        let fr = crate::algebra::OrthoFrame::at(g, r, env)?;
        let full = fr.to_pointwise(&self.f_wedge_f, g, r, &g.params.merged(env))?;
        Ok(p / (1.0 + full.norm()))
    }

    /// Per-sample first-equation norms.
    pub fn first_samples(&self, phi: &Form, g: &Geometry, radii: &[f64], env: &ParamEnv) -> Result<Vec<f64>> {
        radii.iter().map(|r| self.first_relative(phi, g, *r, env)).collect()
    }
}

pub fn residual_dspin7(a: &ConnectionAnsatz, phi: &Form, g: &Geometry) -> Result<Dspin7Residual> {
    let f = curvature(a);
    let ff = wedge(&f, &f)?;
    let f3 = wedge(&ff, &f)?;
    let s = hodge(&f3, &g.metric)?.scale_q(q(1, 6));
    let p1 = pi27(&f, phi, g)?;
    let p2 = pi27(&s, phi, g)?;
    Ok(Dspin7Residual {
        f_wedge_f: ff,
        second: Residual::new(p1.sub(&p2), vec![p1, p2]),
    })
}

/// `F⁴/vol` as an expression (ratio of top-degree coefficients).
pub fn f4_over_vol(a: &ConnectionAnsatz, g: &Geometry) -> Result<Expr> {
    let f = curvature(a);
    let vol = g.volume();
    let top = wedge_power(&f, g.metric.dim() / 2)?;
    let mask = g.metric.mask();
    if let Some((m, _)) = top.terms().iter().find(|(m, _)| **m != mask) {
        return Err(Error::MetricUndefined(g.coframe.label_string(*m)));
    }
    Ok(top.coeff(mask) / vol.coeff(mask))
}

/// Sampled residual of one (family, equation) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub family: String,
    pub equation: String,
    pub radii: Vec<f64>,
    /// `|residual| / (1 + max term norm)` per sample.
    pub values: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(family: &str, equation: &str, radii: Vec<f64>, values: Vec<f64>, tol: f64) -> ResidualReport {
        let pass = values.iter().all(|v| v.is_finite() && *v <= tol);
        ResidualReport {
            family: family.to_string(),
            equation: equation.to_string(),
            radii,
            values,
            tol,
            pass,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| if v.is_nan() { f64::NAN } else { a.max(*v) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometries::{bryant_salamon, calabi, eguchi_hanson, flag_ke, spin7_from_triple};

    fn rr(res: &Residual, g: &Geometry, env: &ParamEnv, radii: &[f64]) -> f64 {
        let e = g.params.merged(env);
        radii.iter().map(|r| res.relative(*r, &e).unwrap()).fold(0.0, f64::max)
    }

    fn cval(g: &Geometry) -> Expr {
        Expr::constant(Rational::from_integer(g.params.get("c").unwrap() as i64))
    }

    #[test]
    fn calabi_curvature_formula() {
        let g = calabi(1.0);
        let a = ConnectionAnsatz::closed(&g, vec![("θ1", Expr::param("k")), ("θ2", Expr::formal("a2"))]).unwrap();
        let f = curvature(&a);
        let env = g.params.clone().with("k", 0.7).with("a2", 1.3).with("a2'", -0.4);
        let c = |ls: &[&str]| f.coeff_of(ls).eval(2.0, &env).unwrap();
        assert_eq!(c(&["dr", "θ2"]), -0.4);
        assert_eq!(c(&["θ3", "θ4"]), -2.6);
        assert!((c(&["θ5", "θ6"]) + 2.0).abs() < 1e-15);
        assert!((c(&["θ7", "θ8"]) + 0.6).abs() < 1e-15);
        assert_eq!(f.terms().len(), 4);
    }

    #[test]
    fn eh_and_flag_curvature() {
        let g = eguchi_hanson(1.0);
        let f = curvature(&ConnectionAnsatz::formal(&g));
        let env = ParamEnv::new()
            .with("f1", 1.0).with("f2", 2.0).with("f3", 3.0)
            .with("f1'", 4.0).with("f2'", 5.0).with("f3'", 6.0);
        let c = |ls: &[&str]| f.coeff_of(ls).eval(1.5, &env).unwrap();
        assert_eq!(c(&["dr", "η1"]), 4.0);
        assert_eq!(c(&["dr", "η3"]), 6.0);
        assert_eq!(c(&["η2", "η3"]), 1.0);
        assert_eq!(c(&["η3", "η1"]), 2.0);
        assert_eq!(c(&["η1", "η2"]), 3.0);
        let g = flag_ke();
        let f = curvature(&ConnectionAnsatz::formal(&g));
        let env = ParamEnv::new().with("a1", 2.0).with("a3", 5.0);
        let c = |ls: &[&str]| f.coeff_of(ls).eval(1.0, &env).unwrap();
        assert_eq!(c(&["θ5", "θ6"]), -2.0);
        assert_eq!(c(&["θ7", "θ8"]), 2.0);
        assert_eq!(c(&["θ2", "θ4"]), 10.0);
        assert_eq!(c(&["θ5", "θ7"]), -5.0);
        assert_eq!(c(&["θ6", "θ8"]), 5.0);
    }

    fn hyper_holomorphic(g: &Geometry) -> ConnectionAnsatz {
        let k = Expr::param("k");
        let a2 = Expr::int(2) * cval(g) * &k / Expr::r().powi(2);
        ConnectionAnsatz::closed(g, vec![("θ1", k), ("θ2", a2)]).unwrap()
    }

    #[test]
    fn hyper_holomorphic_residuals_vanish() {
        let g = calabi(1.0);
        let a = hyper_holomorphic(&g);
        let env = ParamEnv::new().with("k", 0.8);
        let radii = g.sample_radii(12, 10.0);
        for i in 1..=3 {
            let (re, im) = residual_holomorphic(&a, &g, i).unwrap();
            assert!(rr(&re, &g, &env, &radii) < 1e-12);
            assert!(rr(&im, &g, &env, &radii) < 1e-12);
            let h = rr(&residual_hym(&a, &g, i, &Expr::zero()).unwrap(), &g, &env, &radii);
            assert!(h < 1e-12, "hym i={i}: {h}");
            let phi = spin7_from_triple(&g, i).unwrap();
            let ds = residual_dspin7(&a, &phi, &g).unwrap();
            assert!(rr(&ds.second, &g, &env, &radii) < 1e-12);
            for r in [radii[1], radii[7]] {
                assert!(ds.first_relative(&phi, &g, r, &env).unwrap() < 1e-10);
            }
        }
        let bad = ConnectionAnsatz::closed(&g, vec![("θ3", Expr::r())]).unwrap();
        let (re, im) = residual_holomorphic(&bad, &g, 1).unwrap();
        assert!(rr(&re, &g, &env, &radii).max(rr(&im, &g, &env, &radii)) > 1e-3);
    }

    fn multiple_of_omega1(g: &Geometry, m: i64) -> ConnectionAnsatz {
        let k = -cval(g) * Expr::int(m);
        let a2 = Expr::r().powi(2) * Expr::rat(-m, 2);
        ConnectionAnsatz::closed(g, vec![("θ1", k), ("θ2", a2)]).unwrap()
    }

    #[test]
    fn dhym_on_multiples_of_omega() {
        let g = calabi(1.0);
        let radii = g.sample_radii(10, 8.0);
        let env = ParamEnv::new().with_phase(0.0);
        let phase = (&Expr::param("sin"), &Expr::param("cos"));
        let one = residual_dhym(&multiple_of_omega1(&g, 1), &g, 1, phase).unwrap();
        assert!(rr(&one, &g, &env, &radii) < 1e-12);
        let two = residual_dhym(&multiple_of_omega1(&g, 2), &g, 1, phase).unwrap();
        assert!(rr(&two, &g, &env, &radii) > 1e-3);
        // F = cω1 is a Spin(7)-instanton for Φ1 but not for Φ2
        let phi = spin7_from_triple(&g, 1).unwrap();
        let a = multiple_of_omega1(&g, 1);
        assert!(rr(&residual_spin7(&a, &phi, &g).unwrap(), &g, &env, &radii) < 1e-12);
        let phi2 = spin7_from_triple(&g, 2).unwrap();
        assert!(rr(&residual_spin7(&a, &phi2, &g).unwrap(), &g, &env, &radii) > 1e-3);
        let ds = residual_dspin7(&a, &phi, &g).unwrap();
        assert!(rr(&ds.second, &g, &env, &radii) < 1e-12);
        assert!(ds.first_relative(&phi, &g, 2.3, &env).unwrap() < 1e-10);
        let fv = f4_over_vol(&a, &g).unwrap();
        assert!((fv.eval(3.3, &g.params).unwrap() - 24.0).abs() < 1e-10);
    }

    #[test]
    fn n2_dhym_expansion() {
        let g = eguchi_hanson(1.0);
        let a = ConnectionAnsatz::formal(&g);
        let phase = (&Expr::param("sin"), &Expr::param("cos"));
        let res = residual_dhym(&a, &g, 1, phase).unwrap();
        let f = curvature(&a);
        let w = g.kahler(1).unwrap();
        let expect = wedge(&f, w).unwrap().scale(&(Expr::int(2) * Expr::param("cos"))).sub(
            &wedge(w, w).unwrap().sub(&wedge(&f, &f).unwrap()).scale(&Expr::param("sin")),
        );
        let env = ParamEnv::new()
            .with_phase(0.4)
            .with("f1", 0.3).with("f2", -1.1).with("f3", 0.5)
            .with("f1'", 0.2).with("f2'", 0.9).with("f3'", -0.7);
        let e = g.params.merged(&env);
        assert!(res.form.sub(&expect).sup_norm(1.7, &e).unwrap() < 1e-13);
    }

    #[test]
    fn eh_hym_decaying_solution() {
        let g = eguchi_hanson(1.0);
        let f2 = Expr::param("C") * (Expr::r().powi(4) - cval(&g)).sqrt().recip();
        let a = ConnectionAnsatz::closed(&g, vec![("η2", f2)]).unwrap();
        let env = ParamEnv::new().with("C", 1.7);
        let radii = g.sample_radii(10, 6.0);
        let h = rr(&residual_hym(&a, &g, 2, &Expr::zero()).unwrap(), &g, &env, &radii);
        assert!(h < 1e-12, "{h}");
    }

    #[test]
    fn formal_mode_matches_closed() {
        let g = calabi(1.0);
        let closed = hyper_holomorphic(&g);
        let formal = ConnectionAnsatz::formal(&g);
        let env = ParamEnv::new().with("k", -0.6).with_phase(0.3);
        let phase = (&Expr::param("sin"), &Expr::param("cos"));
        let rc = residual_dhym(&closed, &g, 1, phase).unwrap();
        let rf = residual_dhym(&formal, &g, 1, phase).unwrap();
        for r in [1.6, 2.9, 7.0] {
            let e = g.params.merged(&env);
            let b = closed.formal_bindings(&g, r, &env).unwrap();
            let diff = rc.form.sub(&rf.form);
            let vc = rc.form.eval_terms(r, &e).unwrap();
            let vf = rf.form.eval_terms(r, &b).unwrap();
            assert_eq!(vc.len(), vf.len());
            for ((m1, x), (m2, y)) in vc.iter().zip(&vf) {
                assert_eq!(m1, m2);
                assert!((x - y).abs() <= 1e-11 * (1.0 + x.abs()));
            }
            drop(diff);
        }
    }

    #[test]
    fn large_volume_limit() {
        let g = calabi(1.0);
        let lam = 0.8f64;
        let t = 4.0 * lam;
        let mut prev = f64::INFINITY;
        for eps in [1e-2f64, 1e-3, 1e-4] {
            let base = hyper_holomorphic(&g);
            let k = base.coeff("θ1") + Expr::param("lam") * cval(&g);
            let a2 = base.coeff("θ2") + Expr::param("lam") * Expr::r().powi(2) * Expr::rat(1, 2);
            let scaled = ConnectionAnsatz::closed(
                &g,
                vec![("θ1", k * Expr::param("eps")), ("θ2", a2 * Expr::param("eps"))],
            )
            .unwrap();
            let theta = (eps * t).atan();
            let env = g
                .params
                .merged(&ParamEnv::new().with("k", 0.5).with("lam", -lam).with("eps", eps).with_phase(theta));
            let phase = (&Expr::param("sin"), &Expr::param("cos"));
            let res = residual_dhym(&scaled, &g, 1, phase).unwrap();
            let unscaled = ConnectionAnsatz::closed(&g, vec![("θ1", scaled.coeff("θ1")), ("θ2", scaled.coeff("θ2"))]).unwrap();
            let env1 = env.clone().with("eps", 1.0);
            let hym = residual_hym(&unscaled, &g, 1, &Expr::param("l")).unwrap();
            let env1 = env1.with("l", lam);
            let r = 2.5;
            let lhs: Vec<f64> = res.form.eval_terms(r, &env).unwrap().iter().map(|(_, v)| v / (eps * theta.cos())).collect();
            let rhs: Vec<f64> = hym.form.eval_terms(r, &env1).unwrap().iter().map(|(_, v)| 4.0 * v).collect();
            let scale = hym.terms[0].sup_norm(r, &env1).unwrap();
            let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            assert!(err < prev / 5.0 || err < 1e-12, "eps {eps}: {err}");
            assert!(err < 50.0 * eps);
            prev = err;
        }
    }

    #[test]
    fn zero_connection_and_spin7_cone() {
        let g = calabi(1.0);
        let a = ConnectionAnsatz::closed(&g, vec![]).unwrap();
        assert_eq!(f4_over_vol(&a, &g).unwrap().eval(2.0, &g.params).unwrap(), 0.0);
        assert!(ConnectionAnsatz::closed(&g, vec![("θ5", Expr::one())]).is_err());
        let g = bryant_salamon(0.0);
        let p = Expr::r().pow(q(6, 5));
        let a = ConnectionAnsatz::closed(
            &g,
            vec![("θ2", p.clone() * Expr::param("C2")), ("θ3", p.clone() * Expr::param("C3")), ("θ4", p * Expr::param("C4"))],
        )
        .unwrap();
        let phi = g.spin7_form().unwrap().clone();
        let env = ParamEnv::new().with("C2", 0.3).with("C3", -1.2).with("C4", 0.7);
        let radii = [0.5, 1.0, 3.0];
        assert!(rr(&residual_spin7(&a, &phi, &g).unwrap(), &g, &env, &radii) < 1e-12);
    }
}
