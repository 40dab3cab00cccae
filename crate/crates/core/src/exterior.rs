//! Sparse exterior algebra over a fixed coframe.
//!
//! A multi-index is packed into a bit mask; bit `i` set means the basis
//! 1-form with index `i` occurs. Masks are implicitly strictly increasing,
//! signs are tracked when two masks are concatenated.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Expr, ParamEnv, Rational};

pub type Mask = u16;

/// Sign of `e^a ∧ e^b` relative to `e^{a|b}`, or 0 when they overlap.
pub fn wedge_sign(a: Mask, b: Mask) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Indices of the set bits, increasing.
pub fn mask_indices(m: Mask) -> Vec<usize> {
    (0..16).filter(|i| m & (1 << i) != 0).collect()
}

/// All masks of `k` indices drawn from `0..n`, in lexicographic order of index tuples.
pub fn multi_indices(n: usize, k: usize) -> Vec<Mask> {
    fn rec(start: usize, n: usize, k: usize, acc: Mask, out: &mut Vec<Mask>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            if n - i < k {
                break;
            }
            rec(i + 1, n, k - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

/// Masks drawn from the set bits of `within`, lexicographic.
pub fn multi_indices_within(within: Mask, k: usize) -> Vec<Mask> {
    let idx = mask_indices(within);
    multi_indices(idx.len(), k)
        .into_iter()
        .map(|local| {
            mask_indices(local)
                .into_iter()
                .fold(0, |m, i| m | (1 << idx[i]))
        })
        .collect()
}

/// Exact rational 2-form or higher, used for structure-table checks.
pub type ExactForm = BTreeMap<Mask, Rational>;

#[derive(Debug, PartialEq)]
struct CoframeData {
    name: String,
    labels: Vec<String>,
    radial: Option<usize>,
    table: Vec<ExactForm>,
}

/// Basis labels plus the structure equations `dθ_a = Σ c e^i∧e^j`.
#[derive(Debug, Clone)]
pub struct Coframe(Arc<CoframeData>);

impl PartialEq for Coframe {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Coframe {
    /// `rows[a]` lists `(i, j, c)` meaning `c·e^i∧e^j` in `d(e^a)`.
    /// Fails when `d²` does not vanish exactly.
    pub fn new(
        name: &str,
        labels: &[&str],
        radial: Option<usize>,
        rows: Vec<Vec<(usize, usize, Rational)>>,
    ) -> Result<Coframe> {
        assert!(labels.len() <= 16, "at most 16 labels");
        assert_eq!(rows.len(), labels.len(), "one structure row per label");
        let mut table = Vec::with_capacity(rows.len());
        for (a, row) in rows.into_iter().enumerate() {
            let mut f = ExactForm::new();
            for (i, j, c) in row {
                let s = wedge_sign(1 << i, 1 << j);
                if s == 0 {
                    continue;
                }
                *f.entry((1 << i) | (1 << j)).or_insert_with(Rational::zero) +=
                    c * Rational::from_integer(s as i64);
            }
            f.retain(|_, v| !v.is_zero());
            if Some(a) == radial && !f.is_empty() {
                return Err(Error::DomainError("radial label must be closed".into()));
            }
            table.push(f);
        }
        let cf = Coframe(Arc::new(CoframeData {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            radial,
            table,
        }));
        for a in 0..labels.len() {
            if !cf.d_squared_exact(a).is_empty() {
                return Err(Error::DomainError(format!(
                    "structure table of {name} violates d² = 0 on {}",
                    labels[a]
                )));
            }
        }
        Ok(cf)
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn dim(&self) -> usize {
        self.0.labels.len()
    }

    pub fn radial(&self) -> Option<usize> {
        self.0.radial
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.0.labels.iter().position(|l| l == label)
    }

    /// Index of a label known to exist; panics otherwise.
    pub fn ix(&self, label: &str) -> usize {
        self.index(label)
            .unwrap_or_else(|| panic!("label `{label}` not in coframe {}", self.0.name))
    }

    pub fn mask_of(&self, labels: &[&str]) -> Mask {
        labels.iter().fold(0, |m, l| m | (1 << self.ix(l)))
    }

    /// `d(e^a)` as an exact 2-form.
    pub fn structure(&self, a: usize) -> &ExactForm {
        &self.0.table[a]
    }

    /// Exact `d` of a basis monomial `e^I`.
    pub fn d_monomial_exact(&self, m: Mask) -> ExactForm {
        let mut out = ExactForm::new();
        for (pos, i) in mask_indices(m).into_iter().enumerate() {
            let left = m & ((1 << i) - 1);
            let right = m & !((1u32 << (i + 1)) - 1) as Mask;
            let leibniz = if pos % 2 == 0 { 1 } else { -1 };
            for (pair, c) in self.structure(i) {
                let s1 = wedge_sign(left, *pair);
                if s1 == 0 {
                    continue;
                }
                let s2 = wedge_sign(left | pair, right);
                if s2 == 0 {
                    continue;
                }
                let key = left | pair | right;
                *out.entry(key).or_insert_with(Rational::zero) +=
                    *c * Rational::from_integer((leibniz * s1 * s2) as i64);
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// Exact `d(d(e^a))`; empty iff the Jacobi identity holds for row `a`.
    pub fn d_squared_exact(&self, a: usize) -> ExactForm {
        let mut out = ExactForm::new();
        for (m, c) in self.structure(a) {
            for (m2, c2) in self.d_monomial_exact(*m) {
                *out.entry(m2).or_insert_with(Rational::zero) += *c * c2;
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    pub fn label_string(&self, m: Mask) -> String {
        mask_indices(m)
            .into_iter()
            .map(|i| self.0.labels[i].as_str())
            .collect::<Vec<_>>()
            .join("∧")
    }
}

/// Homogeneous form: sparse map mask → coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    coframe: Coframe,
    degree: usize,
    terms: BTreeMap<Mask, Expr>,
}

impl Form {
    pub fn zero(cf: &Coframe, degree: usize) -> Form {
        Form {
            coframe: cf.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(cf: &Coframe, e: Expr) -> Form {
        Form::zero(cf, 0).with_term(0, e)
    }

    /// `coef · e^{l1}∧e^{l2}∧…` for labels in any order.
    pub fn mono(cf: &Coframe, coef: Expr, labels: &[&str]) -> Form {
        let mut m: Mask = 0;
        let mut sign = 1;
        for l in labels {
            let b = 1 << cf.ix(l);
            sign *= wedge_sign(m, b);
            m |= b;
        }
        let f = Form::zero(cf, labels.len());
        if sign == 0 {
            return f;
        }
        f.with_term(m, coef.scale(Rational::from_integer(sign as i64)))
    }

    /// Builds a form from `(coefficient, labels)` pairs.
    pub fn from_monos(cf: &Coframe, degree: usize, monos: Vec<(Expr, &[&str])>) -> Form {
        let mut f = Form::zero(cf, degree);
        for (c, ls) in monos {
            assert_eq!(ls.len(), degree, "monomial degree");
            f = f.add(&Form::mono(cf, c, ls));
        }
        f
    }

    /// Exact rational form lifted to constant coefficients.
    pub fn from_exact(cf: &Coframe, degree: usize, e: &ExactForm) -> Form {
        let mut f = Form::zero(cf, degree);
        for (m, c) in e {
            assert_eq!(m.count_ones() as usize, degree);
            f = f.with_term(*m, Expr::constant(*c));
        }
        f
    }

    fn with_term(mut self, m: Mask, e: Expr) -> Form {
        debug_assert_eq!(m.count_ones() as usize, self.degree);
        if e.is_zero() {
            return self;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let s = old + e;
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
            None => {
                self.terms.insert(m, e);
            }
        }
        self
    }

    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Mask, Expr> {
        &self.terms
    }

    pub fn coeff(&self, m: Mask) -> Expr {
        self.terms.get(&m).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient of the monomial with the given labels (sign-adjusted).
    pub fn coeff_of(&self, labels: &[&str]) -> Expr {
        let unit = Form::mono(&self.coframe, Expr::one(), labels);
        match unit.terms.iter().next() {
            Some((m, s)) => self.coeff(*m) * s,
            None => Expr::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> Mask {
        self.terms.keys().fold(0, |a, m| a | m)
    }

    fn check_same(&self, other: &Form) -> Result<()> {
        if self.coframe != other.coframe {
            return Err(Error::CoframeMismatch);
        }
        Ok(())
    }

    /// Sum of two forms of equal degree over the same coframe; panics otherwise.
    pub fn add(&self, other: &Form) -> Form {
        self.try_add(other).expect("form addition")
    }

    pub fn try_add(&self, other: &Form) -> Result<Form> {
        self.check_same(other)?;
        if self.degree != other.degree && !other.is_zero() && !self.is_zero() {
            return Err(Error::DegreeMismatch(format!(
                "{} + {}",
                self.degree, other.degree
            )));
        }
        let degree = if self.is_zero() { other.degree } else { self.degree };
        let mut out = Form {
            coframe: self.coframe.clone(),
            degree,
            terms: self.terms.clone(),
        };
        for (m, e) in &other.terms {
            out = out.with_term(*m, e.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale_q(-Rational::one())
    }

    pub fn scale_q(&self, c: Rational) -> Form {
        self.scale(&Expr::constant(c))
    }

    pub fn scale(&self, e: &Expr) -> Form {
        let mut out = Form::zero(&self.coframe, self.degree);
        if e.is_zero() {
            return out;
        }
        for (m, t) in &self.terms {
            out = out.with_term(*m, t * e);
        }
        out
    }

    /// Sum of several forms of one degree.
    pub fn sum(cf: &Coframe, degree: usize, forms: &[Form]) -> Form {
        let mut acc: BTreeMap<Mask, Vec<Expr>> = BTreeMap::new();
        for f in forms {
            assert!(f.coframe == *cf, "coframe mismatch in sum");
            assert!(f.is_zero() || f.degree == degree, "degree mismatch in sum");
            for (m, e) in &f.terms {
                acc.entry(*m).or_default().push(e.clone());
            }
        }
        let mut out = Form::zero(cf, degree);
        for (m, es) in acc {
            let s = Expr::sum(es);
            if !s.is_zero() {
                out.terms.insert(m, s);
            }
        }
        out
    }

    /// Numeric sparse coefficients at `r`.
    pub fn eval_terms(&self, r: f64, env: &ParamEnv) -> Result<Vec<(Mask, f64)>> {
        self.terms
            .iter()
            .map(|(m, e)| Ok((*m, e.eval(r, env)?)))
            .collect()
    }

    /// Largest coefficient magnitude before cancellation at `r`.
    pub fn magnitude_norm(&self, r: f64, env: &ParamEnv) -> Result<f64> {
        let mut m = 0.0f64;
        for e in self.terms.values() {
            m = m.max(e.eval_magnitude(r, env)?);
        }
        Ok(m)
    }

    /// Largest absolute numeric coefficient at `r`.
    pub fn sup_norm(&self, r: f64, env: &ParamEnv) -> Result<f64> {
        Ok(self
            .eval_terms(r, env)?
            .into_iter()
            .fold(0.0, |a, (_, v)| a.max(v.abs())))
    }
}

/// `a ∧ b`.
pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    a.check_same(b)?;
    let mut acc: BTreeMap<Mask, Vec<Expr>> = BTreeMap::new();
    for (ma, ea) in &a.terms {
        for (mb, eb) in &b.terms {
            let s = wedge_sign(*ma, *mb);
            if s == 0 {
                continue;
            }
            let mut t = ea * eb;
            if s < 0 {
                t = -t;
            }
            acc.entry(ma | mb).or_default().push(t);
        }
    }
    let mut out = Form::zero(&a.coframe, a.degree + b.degree);
    for (m, es) in acc {
        let s = Expr::sum(es);
        if !s.is_zero() {
            out.terms.insert(m, s);
        }
    }
    Ok(out)
}

/// `a ∧ a ∧ … ∧ a` (`n` factors, `n ≥ 1`).
pub fn wedge_power(a: &Form, n: usize) -> Result<Form> {
    assert!(n >= 1);
    let mut p = a.clone();
    for _ in 1..n {
        p = wedge(&p, a)?;
    }
    Ok(p)
}

/// Exterior derivative: structure equations plus `f' dr ∧ e^I`.
pub fn d(a: &Form) -> Form {
    let cf = &a.coframe;
    let mut acc: BTreeMap<Mask, Vec<Expr>> = BTreeMap::new();
    for (m, f) in &a.terms {
        let df = f.deriv();
        if !df.is_zero() {
            let ri = cf
                .radial()
                .expect("non-constant coefficient on a coframe without radial label");
            let s = wedge_sign(1 << ri, *m);
            if s != 0 {
                let t = if s > 0 { df } else { -df };
                acc.entry(m | (1 << ri)).or_default().push(t);
            }
        }
        for (m2, c) in cf.d_monomial_exact(*m) {
            acc.entry(m2).or_default().push(f.scale(c));
        }
    }
    let mut out = Form::zero(cf, a.degree + 1);
    for (m, es) in acc {
        let s = Expr::sum(es);
        if !s.is_zero() {
            out.terms.insert(m, s);
        }
    }
    out
}

/// Diagonal metric `g = Σ f_a² (e^a)²` on a subset of labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    coframe: Coframe,
    scales: BTreeMap<usize, Expr>,
    orientation: Vec<usize>,
}

impl DiagonalMetric {
    /// `scales` pairs label → f_a; orientation is the listed order.
    pub fn new(cf: &Coframe, scales: Vec<(&str, Expr)>) -> DiagonalMetric {
        let orientation: Vec<usize> = scales.iter().map(|(l, _)| cf.ix(l)).collect();
        DiagonalMetric {
            coframe: cf.clone(),
            scales: scales.into_iter().map(|(l, e)| (cf.ix(l), e)).collect(),
            orientation,
        }
    }

    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }

    pub fn mask(&self) -> Mask {
        self.scales.keys().fold(0, |m, i| m | (1 << i))
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn scale(&self, i: usize) -> Option<&Expr> {
        self.scales.get(&i)
    }

    /// Label indices of the metric-defined subset, increasing.
    pub fn indices(&self) -> Vec<usize> {
        self.scales.keys().copied().collect()
    }

    pub fn orientation(&self) -> &[usize] {
        &self.orientation
    }

    /// Sign of `e^{o1}∧…∧e^{on}` relative to the increasing order.
    pub fn orientation_sign(&self) -> i32 {
        let mut m: Mask = 0;
        let mut s = 1;
        for i in &self.orientation {
            s *= wedge_sign(m, 1 << i);
            m |= 1 << i;
        }
        s
    }

    fn check_support(&self, a: &Form) -> Result<()> {
        if a.coframe != self.coframe {
            return Err(Error::CoframeMismatch);
        }
        let outside = a.support() & !self.mask();
        if outside != 0 {
            let i = outside.trailing_zeros() as usize;
            return Err(Error::MetricUndefined(self.coframe.labels()[i].clone()));
        }
        Ok(())
    }

    fn scale_product(&self, m: Mask) -> Expr {
        Expr::product(
            mask_indices(m)
                .into_iter()
                .map(|i| self.scales[&i].clone())
                .collect(),
        )
    }

    /// Riemannian volume form `Π f_a · e^{orientation}`.
    pub fn volume(&self) -> Form {
        let m = self.mask();
        let c = self.scale_product(m);
        let c = if self.orientation_sign() < 0 { -c } else { c };
        Form::zero(&self.coframe, self.dim()).with_term(m, c)
    }

    /// Numeric scales at `r`, keyed by label index.
    pub fn eval_scales(&self, r: f64, env: &ParamEnv) -> Result<BTreeMap<usize, f64>> {
        self.scales
            .iter()
            .map(|(i, e)| Ok((*i, e.eval(r, env)?)))
            .collect()
    }
}

/// Hodge star of a form supported on the metric labels.
pub fn hodge(a: &Form, g: &DiagonalMetric) -> Result<Form> {
    g.check_support(a)?;
    let full = g.mask();
    let so = g.orientation_sign();
    let mut out = Form::zero(&a.coframe, g.dim() - a.degree);
    for (m, e) in &a.terms {
        let c = full & !m;
        let s = wedge_sign(*m, c) * so;
        let ratio = g.scale_product(c) * g.scale_product(*m).recip();
        let t = e * ratio;
        out = out.with_term(c, if s > 0 { t } else { -t });
    }
    Ok(out)
}

/// Pointwise metric inner product at `r`.
pub fn inner(a: &Form, b: &Form, g: &DiagonalMetric, r: f64, env: &ParamEnv) -> Result<f64> {
    g.check_support(a)?;
    g.check_support(b)?;
    if a.degree != b.degree {
        return Err(Error::DegreeMismatch(format!("{} vs {}", a.degree, b.degree)));
    }
    let f = g.eval_scales(r, env)?;
    let mut s = 0.0;
    for (m, ea) in &a.terms {
        if let Some(eb) = b.terms.get(m) {
            let w: f64 = mask_indices(*m).into_iter().map(|i| f[&i] * f[&i]).product();
            s += ea.eval(r, env)? * eb.eval(r, env)? / w;
        }
    }
    Ok(s)
}

/// Interior product with the metric dual of `e^label`: `(1/f²) ι_{e_label}`.
pub fn contract(label: &str, a: &Form, g: &DiagonalMetric) -> Result<Form> {
    let j = a
        .coframe
        .index(label)
        .ok_or_else(|| Error::MetricUndefined(label.to_string()))?;
    let f = g
        .scale(j)
        .ok_or_else(|| Error::MetricUndefined(label.to_string()))?;
    let w = f.powi(-2);
    let mut out = Form::zero(&a.coframe, a.degree.saturating_sub(1));
    for (m, e) in &a.terms {
        if m & (1 << j) == 0 {
            continue;
        }
        let pos = (m & ((1 << j) - 1)).count_ones();
        let t = e * &w;
        out = out.with_term(m & !(1 << j), if pos % 2 == 0 { t } else { -t });
    }
    Ok(out)
}

/// Dense coefficients over `multi_indices(dim, degree)`.
pub fn eval_form(a: &Form, r: f64, env: &ParamEnv) -> Result<Vec<f64>> {
    let basis = multi_indices(a.coframe.dim(), a.degree);
    let mut out = vec![0.0; basis.len()];
    for (pos, m) in basis.iter().enumerate() {
        if let Some(e) = a.terms.get(m) {
            out[pos] = e.eval(r, env)?;
        }
    }
    Ok(out)
}
