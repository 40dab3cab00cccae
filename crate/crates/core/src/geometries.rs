//! Eguchi–Hanson, the Kähler–Einstein flag, the Calabi hyperKähler metric
//! on T*CP² and the Bryant–Salamon Spin(7) metric.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exterior::{wedge, Coframe, DiagonalMetric, Form};
use crate::homogeneous::{sigma2, sigma3, su2_coframe, su3_coframe};
use crate::scalar::{q, Expr, ParamEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    EguchiHanson,
    FlagKe,
    Calabi,
    BryantSalamon,
}

/// Coframe, diagonal metric and distinguished forms.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub id: String,
    pub kind: GeometryKind,
    pub coframe: Coframe,
    pub metric: DiagonalMetric,
    /// Signed scales `(label, f)` with `ê = f·e^label`, in the order matching
    /// the pointwise models.
    pub frame: Vec<(usize, Expr)>,
    forms: BTreeMap<String, Form>,
    /// Complex dimension.
    pub n: usize,
    pub domain_min: Expr,
    pub params: ParamEnv,
}

impl Geometry {
    pub fn form(&self, name: &str) -> Option<&Form> {
        self.forms.get(name)
    }

    pub fn form_names(&self) -> impl Iterator<Item = &str> {
        self.forms.keys().map(|s| s.as_str())
    }

    pub fn has_triple(&self) -> bool {
        self.forms.contains_key("ω1") && self.forms.contains_key("ω2") && self.forms.contains_key("ω3")
    }

    /// `[ω1, ω2, ω3]`.
    pub fn triple(&self) -> Result<[&Form; 3]> {
        if !self.has_triple() {
            return Err(Error::MissingTriple);
        }
        Ok([&self.forms["ω1"], &self.forms["ω2"], &self.forms["ω3"]])
    }

    /// Kähler form number `i` (1..=3); `ω` on the flag for any `i`.
    pub fn kahler(&self, i: usize) -> Result<&Form> {
        if let Some(w) = self.forms.get("ω") {
            return Ok(w);
        }
        let name = format!("ω{i}");
        self.forms.get(&name).ok_or(Error::MissingKahler(name))
    }

    /// The Spin(7) form carried by the geometry itself (Bryant–Salamon).
    pub fn spin7_form(&self) -> Result<&Form> {
        self.forms
            .get("Φ")
            .ok_or_else(|| Error::MissingKahler("Φ".into()))
    }

    pub fn volume(&self) -> Form {
        self.metric.volume()
    }

    pub fn domain_min_value(&self) -> f64 {
        self.domain_min
            .eval(0.0, &self.params)
            .expect("domain bound evaluates")
    }

    /// `count` log-spaced radii on `[r0(1+1e-3), r_max]` (just `[1]` without a radial direction).
    pub fn sample_radii(&self, count: usize, r_max: f64) -> Vec<f64> {
        if self.coframe.radial().is_none() {
            return vec![1.0];
        }
        let r0 = self.domain_min_value();
        let lo = if r0 > 0.0 { r0 * (1.0 + 1e-3) } else { 1e-2 };
        log_grid(lo, r_max, count)
    }
}

/// `count` log-spaced points between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|j| {
            if j == count - 1 {
                hi
            } else {
                (a + (b - a) * j as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn c() -> Expr {
    Expr::param("c")
}

fn r() -> Expr {
    Expr::r()
}

/// Eguchi–Hanson metric on T*CP¹ with bolt size `c`.
pub fn eguchi_hanson(cval: f64) -> Geometry {
    assert!(cval >= 0.0, "c ≥ 0");
    let cf = su2_coframe();
    let u = Expr::one() - c() * r().powi(-4);
    let half_r = r().scale(q(1, 2));
    let fdr = u.pow(q(-1, 2));
    let f1 = &half_r * u.sqrt();
    let quarter_r2 = r().powi(2).scale(q(1, 4));
    let m = |e: Expr, ls: &[&str]| Form::mono(&cf, e, ls);
    let w1 = m(half_r.clone(), &["dr", "η1"]).add(&m(quarter_r2.clone(), &["η2", "η3"]));
    let w2 = m(&half_r * u.pow(q(-1, 2)), &["dr", "η2"])
        .add(&m(&quarter_r2 * u.sqrt(), &["η3", "η1"]));
    let w3 = m(&half_r * u.pow(q(-1, 2)), &["dr", "η3"])
        .add(&m(&quarter_r2 * u.sqrt(), &["η1", "η2"]));
    let scales = vec![
        ("dr", fdr),
        ("η1", f1),
        ("η2", half_r.clone()),
        ("η3", half_r),
    ];
    let metric = DiagonalMetric::new(&cf, scales.clone());
    let frame = scales.into_iter().map(|(l, e)| (cf.ix(l), e)).collect();
    let forms = BTreeMap::from([("ω1".into(), w1), ("ω2".into(), w2), ("ω3".into(), w3)]);
    Geometry {
        id: "eguchi_hanson".into(),
        kind: GeometryKind::EguchiHanson,
        coframe: cf,
        metric,
        frame,
        forms,
        n: 2,
        domain_min: c().pow(q(1, 4)),
        params: ParamEnv::new().with("c", cval),
    }
}

/// Kähler–Einstein metric on the flag SU(3)/T².
pub fn flag_ke() -> Geometry {
    let cf = su3_coframe(false);
    let s2 = Expr::int(2).sqrt();
    let scales = vec![
        ("θ2", s2.clone()),
        ("θ4", s2),
        ("θ5", Expr::one()),
        ("θ6", Expr::one()),
        ("θ7", Expr::one()),
        ("θ8", Expr::one()),
    ];
    let metric = DiagonalMetric::new(&cf, scales.clone());
    let frame = scales.into_iter().map(|(l, e)| (cf.ix(l), e)).collect();
    let w = Form::from_monos(
        &cf,
        2,
        vec![
            (Expr::int(2), &["θ2", "θ4"]),
            (Expr::int(-1), &["θ5", "θ7"]),
            (Expr::one(), &["θ6", "θ8"]),
        ],
    );
    Geometry {
        id: "flag_ke".into(),
        kind: GeometryKind::FlagKe,
        coframe: cf,
        metric,
        frame,
        forms: BTreeMap::from([("ω".into(), w)]),
        n: 3,
        domain_min: Expr::zero(),
        params: ParamEnv::new(),
    }
}

/// Calabi scales `(f0, f2, f3, f5, f7)`.
pub fn calabi_scales() -> [Expr; 5] {
    let s = Expr::one() - c().powi(2).scale(q(4, 1)) * r().powi(-4);
    let f0 = -s.pow(q(-1, 2));
    let f2 = r() * s.sqrt();
    let f3 = r();
    let f5 = (r().powi(2).scale(q(1, 2)) + c()).sqrt();
    let f7 = (r().powi(2).scale(q(1, 2)) - c()).sqrt();
    [f0, f2, f3, f5, f7]
}

/// Calabi hyperKähler structure on T*CP²; `c = 0` is the cone over N(1,1).
pub fn calabi(cval: f64) -> Geometry {
    assert!(cval >= 0.0, "c ≥ 0");
    let cf = su3_coframe(true);
    let [f0, f2, f3, f5, f7] = calabi_scales();
    let m = |e: Expr, ls: &[&str]| Form::mono(&cf, e, ls);
    let w1 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f2, &["dr", "θ2"]),
            m(f3.powi(2), &["θ3", "θ4"]),
            m(f5.powi(2), &["θ5", "θ6"]),
            m(f7.powi(2), &["θ7", "θ8"]),
        ],
    );
    let w2 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f3, &["dr", "θ3"]),
            m(&f2 * &f3, &["θ4", "θ2"]),
            sigma2(&cf).scale(&(&f5 * &f7)),
        ],
    );
    let w3 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f3, &["dr", "θ4"]),
            m(&f2 * &f3, &["θ2", "θ3"]),
            sigma3(&cf).scale(&(&f5 * &f7)),
        ],
    );
    let a1 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f2, &["dr", "θ2"]),
            m(f3.powi(2), &["θ3", "θ4"]),
            m(-f5.powi(2), &["θ5", "θ6"]),
            m(-f7.powi(2), &["θ7", "θ8"]),
        ],
    );
    let a2 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f3, &["dr", "θ3"]),
            m(&f2 * &f3, &["θ4", "θ2"]),
            sigma2(&cf).scale(&-(&f5 * &f7)),
        ],
    );
    let a3 = Form::sum(
        &cf,
        2,
        &[
            m(&f0 * &f3, &["dr", "θ4"]),
            m(&f2 * &f3, &["θ2", "θ3"]),
            sigma3(&cf).scale(&-(&f5 * &f7)),
        ],
    );
    let frame_list = vec![
        ("dr", f0.clone()),
        ("θ2", f2.clone()),
        ("θ3", f3.clone()),
        ("θ4", f3.clone()),
        ("θ5", f5.clone()),
        ("θ6", f5.clone()),
        ("θ7", f7.clone()),
        ("θ8", f7.clone()),
    ];
    let frame: Vec<(usize, Expr)> = frame_list.iter().map(|(l, e)| (cf.ix(l), e.clone())).collect();
    // Positive metric scale |f0|; the orientation is that of the signed frame
    // ê = (f0 dr, f2 θ2, …), i.e. opposite to dr∧θ2∧…∧θ8, so that
    // vol = ω1⁴/24 with the displayed negative f0.
    let mut scales = frame_list;
    scales[0].1 = -f0;
    scales.swap(0, 1);
    let metric = DiagonalMetric::new(&cf, scales);
    let forms = BTreeMap::from([
        ("ω1".into(), w1),
        ("ω2".into(), w2),
        ("ω3".into(), w3),
        ("α1".into(), a1),
        ("α2".into(), a2),
        ("α3".into(), a3),
    ]);
    Geometry {
        id: "calabi".into(),
        kind: GeometryKind::Calabi,
        coframe: cf,
        metric,
        frame,
        forms,
        n: 4,
        domain_min: c().scale(q(2, 1)).sqrt(),
        params: ParamEnv::new().with("c", cval),
    }
}

/// `Φ_i = ½(−ω_i² + ω_j² + ω_k²)`.
pub fn spin7_from_triple(g: &Geometry, i: usize) -> Result<Form> {
    assert!((1..=3).contains(&i), "i ∈ 1..=3");
    let w = g.triple()?;
    let sq = |f: &Form| wedge(f, f);
    let mut out = Form::zero(&g.coframe, 4);
    for (j, wj) in w.iter().enumerate() {
        let s = if j + 1 == i { q(-1, 2) } else { q(1, 2) };
        out = out.add(&sq(wj)?.scale_q(s));
    }
    Ok(out)
}

/// Bryant–Salamon scales `(h0, h2, h5)`.
pub fn bs_scales() -> [Expr; 3] {
    let rc = r().powi(2) + c();
    let h0 = Expr::int(2) * rc.pow(q(-1, 5));
    let h2 = Expr::int(2) * r() * rc.pow(q(-1, 5));
    let h5 = Expr::int(10).sqrt() * rc.pow(q(3, 10));
    [h0, h2, h5]
}

/// Bryant–Salamon Spin(7) structure on the orbi-spinor bundle of CP².
pub fn bryant_salamon(cval: f64) -> Geometry {
    assert!(cval >= 0.0, "c ≥ 0");
    let cf = su3_coframe(true);
    let [h0, h2, h5] = bs_scales();
    let m = |e: Expr, ls: &[&str]| Form::mono(&cf, e, ls);
    let h25 = &h2 * h5.powi(2);
    let h2255 = h2.powi(2) * h5.powi(2);
    let mut terms = vec![m(&h0 * h2.powi(3), &["dr", "θ2", "θ3", "θ4"])];
    for (s, ls) in [
        (1, ["θ2", "θ5", "θ6"]),
        (1, ["θ2", "θ7", "θ8"]),
        (1, ["θ3", "θ5", "θ7"]),
        (-1, ["θ3", "θ6", "θ8"]),
        (1, ["θ4", "θ5", "θ8"]),
        (1, ["θ4", "θ6", "θ7"]),
    ] {
        let coef = (&h0 * &h25).scale(q(-s, 1));
        terms.push(m(coef, &["dr", ls[0], ls[1], ls[2]]));
    }
    for (s, ls) in [
        (1, ["θ2", "θ3", "θ5", "θ8"]),
        (1, ["θ2", "θ3", "θ6", "θ7"]),
        (-1, ["θ2", "θ4", "θ5", "θ7"]),
        (1, ["θ2", "θ4", "θ6", "θ8"]),
        (1, ["θ3", "θ4", "θ5", "θ6"]),
        (1, ["θ3", "θ4", "θ7", "θ8"]),
    ] {
        terms.push(m(h2255.scale(q(-s, 1)), &ls));
    }
    terms.push(m(h5.powi(4), &["θ5", "θ6", "θ7", "θ8"]));
    let phi = Form::sum(&cf, 4, &terms);
    let scales = vec![
        ("dr", h0),
        ("θ2", h2.clone()),
        ("θ3", h2.clone()),
        ("θ4", h2),
        ("θ5", h5.clone()),
        ("θ6", h5.clone()),
        ("θ7", h5.clone()),
        ("θ8", h5),
    ];
    let frame = scales.iter().map(|(l, e)| (cf.ix(l), e.clone())).collect();
    let metric = DiagonalMetric::new(&cf, scales);
    Geometry {
        id: "bryant_salamon".into(),
        kind: GeometryKind::BryantSalamon,
        coframe: cf,
        metric,
        frame,
        forms: BTreeMap::from([("Φ".into(), phi)]),
        n: 4,
        domain_min: Expr::zero(),
        params: ParamEnv::new().with("c", cval),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{d, eval_form, hodge, inner, multi_indices, wedge_power};

    fn rel_diff(a: &Form, b: &Form, r: f64, env: &ParamEnv) -> f64 {
        let diff = a.sub(b).sup_norm(r, env).unwrap();
        diff / (1.0 + a.sup_norm(r, env).unwrap().max(b.sup_norm(r, env).unwrap()))
    }

    #[test]
    fn calabi_volume_and_stars() {
        for cv in [0.0, 1.0] {
            let g = calabi(cv);
            let env = g.params.clone();
            let w1 = g.form("ω1").unwrap();
            let w4 = wedge_power(w1, 4).unwrap().scale_q(q(1, 24));
            let w3 = wedge_power(w1, 3).unwrap().scale_q(q(1, 6));
            for r in [1.5, 3.0, 20.0] {
                assert!(rel_diff(&w4, &g.volume(), r, &env) < 1e-13);
                let sw = hodge(w1, &g.metric).unwrap();
                assert!(rel_diff(&sw, &w3, r, &env) < 1e-13);
                for i in 1..=3 {
                    let phi = spin7_from_triple(&g, i).unwrap();
                    let sp = hodge(&phi, &g.metric).unwrap();
                    assert!(rel_diff(&sp, &phi, r, &env) < 1e-13);
                    let pp = wedge(&phi, &phi).unwrap().scale_q(q(1, 14));
                    assert!(rel_diff(&pp, &g.volume(), r, &env) < 1e-13);
                }
                assert!((inner(w1, w1, &g.metric, r, &env).unwrap() - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn calabi_triple_compatible() {
        // In real dimension 8 the ω_i² differ; compatibility is
        // ω_i⁴ = ω_j⁴ and ω_i³∧ω_j = 0 for i ≠ j.
        let g = calabi(1.0);
        let env = g.params.clone();
        let w = g.triple().unwrap();
        let r = 2.3;
        let p4: Vec<Form> = w.iter().map(|x| wedge_power(x, 4).unwrap()).collect();
        assert!(rel_diff(&p4[0], &p4[1], r, &env) < 1e-13);
        assert!(rel_diff(&p4[0], &p4[2], r, &env) < 1e-13);
        for i in 0..3 {
            let cube = wedge_power(w[i], 3).unwrap();
            for j in 0..3 {
                if i != j {
                    let t = wedge(&cube, w[j]).unwrap();
                    assert!(t.sup_norm(r, &env).unwrap() < 1e-12 * (1.0 + p4[0].sup_norm(r, &env).unwrap()));
                }
            }
        }
        for x in w {
            assert!(d(x).sup_norm(r, &env).unwrap() < 1e-12);
        }
    }

    #[test]
    fn eh_triple_compatible() {
        let g = eguchi_hanson(1.0);
        let env = g.params.clone();
        let [w1, w2, w3] = g.triple().unwrap();
        let r = 1.7;
        let sq1 = wedge(w1, w1).unwrap();
        assert!(rel_diff(&sq1, &wedge(w2, w2).unwrap(), r, &env) < 1e-13);
        assert!(rel_diff(&sq1, &wedge(w3, w3).unwrap(), r, &env) < 1e-13);
        for (a, b) in [(w1, w2), (w1, w3), (w2, w3)] {
            assert!(wedge(a, b).unwrap().sup_norm(r, &env).unwrap() < 1e-13);
        }
    }

    #[test]
    fn calabi_bolt_restriction() {
        let g = calabi(1.0);
        let env = g.params.clone();
        let v = eval_form(g.form("ω1").unwrap(), 2f64.sqrt(), &env).unwrap();
        let basis = multi_indices(g.coframe.dim(), 2);
        let at = |ls: &[&str]| v[basis.iter().position(|m| *m == g.coframe.mask_of(ls)).unwrap()];
        assert!((at(&["θ3", "θ4"]) - 2.0).abs() < 1e-12);
        assert!((at(&["θ5", "θ6"]) - 2.0).abs() < 1e-12);
        assert!(at(&["θ7", "θ8"]).abs() < 1e-7);
    }

    #[test]
    fn eh_structure() {
        let g = eguchi_hanson(1.0);
        let env = g.params.clone();
        let [w1, w2, w3] = g.triple().unwrap();
        for r in [1.1, 2.0, 10.0] {
            for w in [w1, w2, w3] {
                assert!(d(w).sup_norm(r, &env).unwrap() < 1e-12);
                assert!(rel_diff(&hodge(w, &g.metric).unwrap(), w, r, &env) < 1e-13);
            }
            let vol = wedge(w1, w1).unwrap().scale_q(q(1, 2));
            assert!(rel_diff(&vol, &g.volume(), r, &env) < 1e-13);
        }
        let a = Form::mono(&g.coframe, Expr::one(), &["dr", "η1"]);
        let star = hodge(&a, &g.metric).unwrap();
        let c = star.coeff_of(&["η2", "η3"]).eval(3.0, &env).unwrap();
        assert!((c - 1.5).abs() < 1e-14);
        let flat = eguchi_hanson(0.0);
        let fe = flat.params.clone();
        for i in 0..4 {
            // r = 2: f_dr = 1 and r/2 = 1
            let s = flat.metric.scale(i).unwrap().eval(2.0, &fe).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn flag_structure() {
        let g = flag_ke();
        let w = g.form("ω").unwrap();
        let env = ParamEnv::new();
        let w3 = wedge_power(w, 3).unwrap();
        let c = w3.coeff_of(&["θ2", "θ4", "θ5", "θ6", "θ7", "θ8"]).eval(0.0, &env).unwrap();
        assert!((c - 12.0).abs() < 1e-14);
        assert!(d(w).is_zero());
        let vol = w3.scale_q(q(1, 6));
        assert!(rel_diff(&vol, &g.volume(), 1.0, &env) < 1e-14);
    }

    #[test]
    fn bryant_salamon_structure() {
        for cv in [0.0, 1.0] {
            let g = bryant_salamon(cv);
            let env = g.params.clone();
            let phi = g.spin7_form().unwrap();
            for r in [0.5, 2.0, 30.0] {
                assert!(d(phi).sup_norm(r, &env).unwrap() / (1.0 + phi.sup_norm(r, &env).unwrap()) < 1e-13);
                let pp = wedge(phi, phi).unwrap().scale_q(q(1, 14));
                assert!(rel_diff(&pp, &g.volume(), r, &env) < 1e-13);
                assert!(rel_diff(&hodge(phi, &g.metric).unwrap(), phi, r, &env) < 1e-13);
            }
            let h5 = phi.coeff_of(&["θ5", "θ6", "θ7", "θ8"]).eval(2.0, &env).unwrap();
            assert!((h5 - 100.0 * (4.0 + cv).powf(1.2)).abs() < 1e-9);
        }
    }
}
