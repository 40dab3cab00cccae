//! Sp(2) and Spin(7) decompositions of 2- and 4-forms.
//!
//! Symbolic operations (`j_action`, `pi27`) act on raw-coframe forms.
//! Everything else works pointwise: forms are evaluated at a radius in the
//! signed orthonormal frame `ê = f·e` of the geometry, where the metric is
//! Euclidean and the orientation is `ê^{0…n-1}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::exterior::{hodge, mask_indices, multi_indices, wedge, wedge_sign, Form, Mask};
use crate::geometries::Geometry;
use crate::scalar::{q, ParamEnv};

/// Dense form in a local orthonormal frame of dimension `n`, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Pointwise {
    pub n: usize,
    pub degree: usize,
    coef: Vec<f64>,
}

impl Pointwise {
    pub fn zero(n: usize, degree: usize) -> Self {
        Pointwise {
            n,
            degree,
            coef: vec![0.0; 1 << n],
        }
    }

    pub fn basis(n: usize, m: Mask) -> Self {
        let mut p = Pointwise::zero(n, m.count_ones() as usize);
        p.coef[m as usize] = 1.0;
        p
    }

    pub fn get(&self, m: Mask) -> f64 {
        self.coef[m as usize]
    }

    pub fn set(&mut self, m: Mask, v: f64) {
        debug_assert_eq!(m.count_ones() as usize, self.degree);
        self.coef[m as usize] = v;
    }

    fn nonzero(&self) -> impl Iterator<Item = (Mask, f64)> + '_ {
        self.coef
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(m, v)| (m as Mask, *v))
    }

    pub fn add(&self, o: &Pointwise) -> Pointwise {
        assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (a, b) in out.coef.iter_mut().zip(&o.coef) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Pointwise {
        let mut out = self.clone();
        out.coef.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn sub(&self, o: &Pointwise) -> Pointwise {
        self.add(&o.scale(-1.0))
    }

    pub fn wedge(&self, o: &Pointwise) -> Pointwise {
        assert_eq!(self.n, o.n);
        let mut out = Pointwise::zero(self.n, self.degree + o.degree);
        for (ma, va) in self.nonzero() {
            for (mb, vb) in o.nonzero() {
                let s = wedge_sign(ma, mb);
                if s != 0 {
                    out.coef[(ma | mb) as usize] += s as f64 * va * vb;
                }
            }
        }
        out
    }

    pub fn star(&self) -> Pointwise {
        let full: Mask = ((1u32 << self.n) - 1) as Mask;
        let mut out = Pointwise::zero(self.n, self.n - self.degree);
        for (m, v) in self.nonzero() {
            let c = full & !m;
            out.coef[c as usize] += wedge_sign(m, c) as f64 * v;
        }
        out
    }

    /// Interior product with the unit vector `e_a`.
    pub fn contract(&self, a: usize) -> Pointwise {
        let mut out = Pointwise::zero(self.n, self.degree.saturating_sub(1));
        for (m, v) in self.nonzero() {
            if m & (1 << a) == 0 {
                continue;
            }
            let pos = (m & ((1 << a) - 1)).count_ones();
            let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
            out.coef[(m & !(1 << a)) as usize] += s * v;
        }
        out
    }

    pub fn dot(&self, o: &Pointwise) -> f64 {
        self.coef.iter().zip(&o.coef).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.coef.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Pullback along a signed permutation of 1-forms: `ê^a ↦ s_a ê^{π(a)}`.
    pub fn pullback(&self, perm: &[(usize, f64)]) -> Pointwise {
        let mut out = Pointwise::zero(self.n, self.degree);
        for (m, v) in self.nonzero() {
            let mut acc: Mask = 0;
            let mut s = v;
            for a in mask_indices(m) {
                let (b, sb) = perm[a];
                let w = wedge_sign(acc, 1 << b);
                if w == 0 {
                    s = 0.0;
                    break;
                }
                s *= sb * w as f64;
                acc |= 1 << b;
            }
            if s != 0.0 {
                out.coef[acc as usize] += s;
            }
        }
        out
    }

    /// Coefficients over `multi_indices(n, degree)`.
    pub fn to_vec(&self) -> DVector<f64> {
        let b = multi_indices(self.n, self.degree);
        DVector::from_iterator(b.len(), b.iter().map(|m| self.coef[*m as usize]))
    }

    pub fn from_vec(n: usize, degree: usize, v: &DVector<f64>) -> Pointwise {
        let mut p = Pointwise::zero(n, degree);
        for (m, x) in multi_indices(n, degree).into_iter().zip(v.iter()) {
            p.coef[m as usize] = *x;
        }
        p
    }
}

/// Orthonormal frame of a geometry evaluated at one radius.
#[derive(Debug, Clone)]
pub struct OrthoFrame {
    /// Coframe index of each local index.
    pub labels: Vec<usize>,
    /// Signed scales `ê_a = f_a e^{labels[a]}`.
    pub scales: Vec<f64>,
}

impl OrthoFrame {
    pub fn at(g: &Geometry, r: f64, env: &ParamEnv) -> Result<OrthoFrame> {
        let env = g.params.merged(env);
        let mut labels = Vec::new();
        let mut scales = Vec::new();
        for (l, f) in &g.frame {
            labels.push(*l);
            scales.push(f.eval(r, &env)?);
        }
        Ok(OrthoFrame { labels, scales })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    fn local(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// Evaluates a raw form and re-expresses it in the orthonormal frame.
    pub fn to_pointwise(&self, a: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<Pointwise> {
        let env = g.params.merged(env);
        let mut out = Pointwise::zero(self.n(), a.degree());
        for (m, e) in a.terms() {
            let mut lm: Mask = 0;
            let mut sign = 1.0;
            let mut w = 1.0;
            for i in mask_indices(*m) {
                let li = self
                    .local(i)
                    .ok_or_else(|| Error::MetricUndefined(a.coframe().labels()[i].clone()))?;
                sign *= wedge_sign(lm, 1 << li) as f64;
                lm |= 1 << li;
                w *= self.scales[li];
            }
            out.coef[lm as usize] += sign * e.eval(r, &env)? / w;
        }
        Ok(out)
    }
}

/// Signed-permutation tables of `J_1, J_2, J_3` acting on orthonormal 1-forms.
#[derive(Debug, Clone, PartialEq)]
pub struct JTable {
    /// `perm[i][a] = (b, s)` means `J_{i+1}^* ê^a = s ê^b`.
    pub perm: [Vec<(usize, f64)>; 3],
}

impl JTable {
    /// Derives `J_i` from `ω_i(·,·) = g(J_i·,·)` using the pointwise models.
    pub fn of(g: &Geometry) -> Result<JTable> {
        let w = g.triple()?;
        let r = sample_radius(g);
        let fr = OrthoFrame::at(g, r, &ParamEnv::new())?;
        let n = fr.n();
        let mut perm: [Vec<(usize, f64)>; 3] = Default::default();
        for i in 0..3 {
            let p = fr.to_pointwise(w[i], g, r, &ParamEnv::new())?;
            // ω(e_a, e_b) = W_ab; J e_b = Σ_a W_ba e_a; J^* ê^a = Σ_b W_ba ê^b
            let mut rows = vec![(usize::MAX, 0.0); n];
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let m: Mask = (1 << a) | (1 << b);
                    let wab = p.get(m) * if a < b { 1.0 } else { -1.0 };
                    let wba = -wab;
                    if wba.abs() > 1e-9 {
                        if (wba.abs() - 1.0).abs() > 1e-9 || rows[a].0 != usize::MAX {
                            return Err(Error::DomainError(
                                "Kähler form is not in pointwise normal form".into(),
                            ));
                        }
                        rows[a] = (b, wba.signum());
                    }
                }
            }
            if rows.iter().any(|x| x.0 == usize::MAX) {
                return Err(Error::DomainError("degenerate Kähler form".into()));
            }
            perm[i] = rows;
        }
        Ok(JTable { perm })
    }

    /// Matrix of `J_i` on vectors: `J e_b = Σ_a M[a,b] e_a`.
    pub fn vector_matrix(&self, i: usize) -> DMatrix<f64> {
        let n = self.perm[i - 1].len();
        let mut m = DMatrix::zeros(n, n);
        for (a, (b, s)) in self.perm[i - 1].iter().enumerate() {
            // J^* ê^a = s ê^b  ⇔  ê^a(J e_b) = s
            m[(a, *b)] = *s;
        }
        m
    }
}

/// A radius safely inside the domain, used for constant pointwise data.
pub fn sample_radius(g: &Geometry) -> f64 {
    let r0 = g.domain_min_value();
    2.0 * r0 + 1.0
}

fn other_two(i: usize) -> (usize, usize) {
    match i {
        1 => (2, 3),
        2 => (3, 1),
        3 => (1, 2),
        _ => panic!("index must be 1, 2 or 3"),
    }
}

/// `α ↦ α(J_i·,…,J_i·)` on even-degree forms.
pub fn j_action(a: &Form, g: &Geometry, i: usize) -> Result<Form> {
    let jt = JTable::of(g)?;
    let perm = &jt.perm[i - 1];
    let cf = &g.coframe;
    let frame = &g.frame;
    let local = |label: usize| frame.iter().position(|(l, _)| *l == label);
    let mut out = Form::zero(cf, a.degree());
    for (m, e) in a.terms() {
        let mut labels: Vec<&str> = Vec::new();
        let mut coef = e.clone();
        for idx in mask_indices(*m) {
            let la = local(idx).ok_or_else(|| Error::MetricUndefined(cf.labels()[idx].clone()))?;
            let (lb, s) = perm[la];
            let (fa, fb) = (&frame[la].1, &frame[lb].1);
            coef = coef * fb * fa.recip();
            if s < 0.0 {
                coef = -coef;
            }
            labels.push(cf.labels()[frame[lb].0].as_str());
        }
        out = out.add(&Form::mono(cf, coef, &labels));
    }
    Ok(out)
}

/// Numeric Sp(2) components of a 2-form in the orthonormal frame.
#[derive(Debug, Clone)]
pub struct TwoFormSplit {
    pub omega: [DVector<f64>; 3],
    pub e: [DVector<f64>; 3],
    pub lambda10: DVector<f64>,
}

impl TwoFormSplit {
    pub fn total(&self) -> DVector<f64> {
        let mut t = self.lambda10.clone();
        for i in 0..3 {
            t += &self.omega[i] + &self.e[i];
        }
        t
    }
}

/// Splits a 2-form into `⟨ω1⟩,⟨ω2⟩,⟨ω3⟩, E1, E2, E3, Λ²₁₀` at `r`.
pub fn decompose_two_form(a: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<TwoFormSplit> {
    if a.degree() != 2 {
        return Err(Error::DegreeMismatch("decompose_two_form needs a 2-form".into()));
    }
    let w = g.triple()?;
    let fr = OrthoFrame::at(g, r, env)?;
    let x = fr.to_pointwise(a, g, r, env)?;
    let om: Vec<Pointwise> = w
        .iter()
        .map(|f| fr.to_pointwise(f, g, r, env))
        .collect::<Result<_>>()?;
    let sq: Vec<Pointwise> = om.iter().map(|o| o.wedge(o)).collect();
    let mut beta = x.clone();
    let mut omega: [DVector<f64>; 3] = Default::default();
    for i in 0..3 {
        let c = x.dot(&om[i]) / om[i].dot(&om[i]);
        let part = om[i].scale(c);
        beta = beta.sub(&part);
        omega[i] = part.to_vec();
    }
    // On ω^⊥ each T_i = ⋆(·∧ω_i²) has eigenvalues ±2.
    let t = |i: usize, p: &Pointwise| p.wedge(&sq[i]).star();
    let proj = |i: usize, plus: bool, p: &Pointwise| {
        let tp = t(i, p);
        let s = if plus { 1.0 } else { -1.0 };
        p.scale(2.0).add(&tp.scale(s)).scale(0.25)
    };
    let mut e: [DVector<f64>; 3] = Default::default();
    for i in 0..3 {
        let mut p = beta.clone();
        for j in 0..3 {
            p = proj(j, j != i, &p);
        }
        e[i] = p.to_vec();
    }
    let mut l10 = beta;
    for j in 0..3 {
        l10 = proj(j, false, &l10);
    }
    Ok(TwoFormSplit {
        omega,
        e,
        lambda10: l10.to_vec(),
    })
}

/// `π²₇(α) = ¼(α + ⋆(α∧Φ))`.
pub fn pi27(a: &Form, phi: &Form, g: &Geometry) -> Result<Form> {
    let s = hodge(&wedge(a, phi)?, &g.metric)?;
    Ok(a.add(&s).scale_q(q(1, 4)))
}

/// `π²₂₁(α) = ¼(3α − ⋆(α∧Φ))`.
pub fn pi221(a: &Form, phi: &Form, g: &Geometry) -> Result<Form> {
    let s = hodge(&wedge(a, phi)?, &g.metric)?;
    Ok(a.scale_q(q(3, 1)).sub(&s).scale_q(q(1, 4)))
}

/// `(α∧β)⋄Φ = α∧(β♯⌟Φ) − β∧(α♯⌟Φ)`, extended linearly to 2-forms.
pub fn diamond(a: &Pointwise, phi: &Pointwise) -> Pointwise {
    let n = a.n;
    let mut out = Pointwise::zero(n, phi.degree);
    for (m, v) in a.nonzero() {
        let ix = mask_indices(m);
        let (i, j) = (ix[0], ix[1]);
        let ei = Pointwise::basis(n, 1 << i);
        let ej = Pointwise::basis(n, 1 << j);
        let t = ei.wedge(&phi.contract(j)).sub(&ej.wedge(&phi.contract(i)));
        out = out.add(&t.scale(v));
    }
    out
}

/// Orthonormal basis of the span of `vs` (modified Gram–Schmidt with rank cut-off).
pub fn orthonormalize(vs: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let scale = vs.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&w);
                w -= u * c;
            }
        }
        let nw = w.norm();
        if nw > tol * scale.max(1e-300) {
            out.push(w / nw);
        }
    }
    out
}

/// Largest principal angle between two subspaces given by orthonormal bases.
pub fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    if a.len() != b.len() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.is_empty() {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for (x, y) in [(a, b), (b, a)] {
        let qa = DMatrix::from_columns(x);
        let qb = DMatrix::from_columns(y);
        let resid = &qb - &qa * (qa.transpose() * &qb);
        let s = resid.svd(false, false).singular_values.max();
        worst = worst.max(s.min(1.0).asin());
    }
    worst
}

/// Λ²₇ at `r`: the eigenvalue-3 eigenspace of `α ↦ ⋆(α∧Φ)`.
pub fn lambda27_basis(phi: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<Vec<DVector<f64>>> {
    let fr = OrthoFrame::at(g, r, env)?;
    let p = fr.to_pointwise(phi, g, r, env)?;
    let n = fr.n();
    let basis = multi_indices(n, 2);
    let dim = basis.len();
    let mut t = DMatrix::zeros(dim, dim);
    for (col, m) in basis.iter().enumerate() {
        let img = Pointwise::basis(n, *m).wedge(&p).star().to_vec();
        t.set_column(col, &img);
    }
    let sym = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let tol = 1e-6 * (1.0 + eig.eigenvalues.amax());
    let vecs: Vec<DVector<f64>> = (0..dim)
        .filter(|k| (eig.eigenvalues[*k] - 3.0).abs() < tol)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if vecs.len() != 7 {
        return Err(Error::NotSpin7(vecs.len()));
    }
    Ok(vecs)
}

/// Orthonormal basis of Λ⁴₇ at `r`, as orthonormal-frame coefficient vectors
/// over `multi_indices(n, 4)`.
pub fn lambda47_basis(phi: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<Vec<DVector<f64>>> {
    let fr = OrthoFrame::at(g, r, env)?;
    let p = fr.to_pointwise(phi, g, r, env)?;
    let n = fr.n();
    let l27 = lambda27_basis(phi, g, r, env)?;
    let imgs: Vec<DVector<f64>> = l27
        .iter()
        .map(|v| diamond(&Pointwise::from_vec(n, 2, v), &p).to_vec())
        .collect();
    let out = orthonormalize(&imgs, 1e-8);
    if out.len() != 7 {
        return Err(Error::NotSpin7(out.len()));
    }
    Ok(out)
}

/// Norm of the Λ⁴₇ component of a 4-form at `r` (orthonormal-frame norm).
pub fn pi47_norm(a: &Form, phi: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<f64> {
    let fr = OrthoFrame::at(g, r, env)?;
    let x = fr.to_pointwise(a, g, r, env)?.to_vec();
    let basis = lambda47_basis(phi, g, r, env)?;
    Ok(basis.iter().map(|u| u.dot(&x).powi(2)).sum::<f64>().sqrt())
}

/// F³₊ component of a 4-form at `r`: self-dualise, combine
/// `β − J1β − J2β + J3β`, drop the `ω1∧ω2` direction, divide by 4.
pub fn f3plus_project(a: &Form, g: &Geometry, r: f64, env: &ParamEnv) -> Result<DVector<f64>> {
    let fr = OrthoFrame::at(g, r, env)?;
    let ctx = F3Context::new(g, &fr, r, env)?;
    Ok(ctx.project(&fr.to_pointwise(a, g, r, env)?).to_vec())
}

struct F3Context {
    jt: JTable,
    w12: Pointwise,
}

impl F3Context {
    fn new(g: &Geometry, fr: &OrthoFrame, r: f64, env: &ParamEnv) -> Result<F3Context> {
        let w = g.triple()?;
        let w12 = fr
            .to_pointwise(w[0], g, r, env)?
            .wedge(&fr.to_pointwise(w[1], g, r, env)?);
        Ok(F3Context { jt: JTable::of(g)?, w12 })
    }

    fn project(&self, x: &Pointwise) -> Pointwise {
        let b = x.add(&x.star()).scale(0.5);
        let p = &self.jt.perm;
        let c = b
            .sub(&b.pullback(&p[0]))
            .sub(&b.pullback(&p[1]))
            .add(&b.pullback(&p[2]));
        let u = &self.w12;
        c.sub(&u.scale(c.dot(u) / u.dot(u))).scale(0.25)
    }
}

/// The relation `ι_X(ω_j²−ω_k²)/2 = ι_{J_iX}(ω_j∧ω_k)` at `r` for vector `x`
/// (orthonormal components); returns the sup-norm of the difference.
pub fn j_relation_defect(g: &Geometry, i: usize, x: &DVector<f64>, r: f64, env: &ParamEnv) -> Result<f64> {
    let w = g.triple()?;
    let jt = JTable::of(g)?;
    let fr = OrthoFrame::at(g, r, env)?;
    let (j, k) = other_two(i);
    let oj = fr.to_pointwise(w[j - 1], g, r, env)?;
    let ok = fr.to_pointwise(w[k - 1], g, r, env)?;
    let lhs_form = oj.wedge(&oj).sub(&ok.wedge(&ok)).scale(0.5);
    let rhs_form = oj.wedge(&ok);
    let contract_vec = |p: &Pointwise, v: &DVector<f64>| {
        let mut out = Pointwise::zero(p.n, p.degree - 1);
        for a in 0..p.n {
            if v[a] != 0.0 {
                out = out.add(&p.contract(a).scale(v[a]));
            }
        }
        out
    };
    let jx = jt.vector_matrix(i) * x;
    let lhs = contract_vec(&lhs_form, x);
    let rhs = contract_vec(&rhs_form, &jx);
    Ok(lhs.sub(&rhs).sup())
}

/// The ω1∧ω2, ω1∧ω3, ω2∧ω3 and E-type spans for Φ_i, pointwise.
pub fn lambda47_from_j(g: &Geometry, i: usize, r: f64, env: &ParamEnv) -> Result<Vec<DVector<f64>>> {
    // Λ⁴₇(Φ_i) = ⟨ω_i∧ω_j, ω_i∧ω_k⟩ ⊕ F_i⁺ ; the J-algorithm is written for i = 3.
    assert_eq!(i, 3, "the J-algorithm is stated for Φ3");
    let w = g.triple()?;
    let fr = OrthoFrame::at(g, r, env)?;
    let n = fr.n();
    let ctx = F3Context::new(g, &fr, r, env)?;
    let vs: Vec<DVector<f64>> = multi_indices(n, 4)
        .into_iter()
        .map(|m| ctx.project(&Pointwise::basis(n, m)).to_vec())
        .collect();
    let mut f3 = orthonormalize(&vs, 1e-8);
    let o: Vec<Pointwise> = w
        .iter()
        .map(|f| fr.to_pointwise(f, g, r, env))
        .collect::<Result<_>>()?;
    let mut all = vec![o[0].wedge(&o[2]).to_vec(), o[1].wedge(&o[2]).to_vec()];
    all.append(&mut f3);
    Ok(orthonormalize(&all, 1e-8))
}
