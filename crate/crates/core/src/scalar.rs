//! Coefficient expressions in the radial variable `r`.
//!
//! Constants are exact rationals. Division is `Power(·, -1)` and square
//! roots are `Power(·, 1/2)`; the only normalization is constant folding
//! and flattening of sums and products.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::Ratio<i64>;

/// Shorthand for the rational `n/d`.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Rational),
    Radial,
    Param(String),
    /// Formal unknown `name` differentiated `order` times.
    Formal { name: String, order: u32 },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, Rational),
    LambertW0(Expr),
}

/// Immutable, cheaply cloned expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Arc<Node>);

/// Binding key of the `order`-th derivative of a formal unknown: `a2`, `a2'`, `a2''`.
pub fn formal_key(name: &str, order: u32) -> String {
    let mut s = name.to_string();
    for _ in 0..order {
        s.push('\'');
    }
    s
}

impl Expr {
    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Rational::from_integer(n))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::constant(q(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// The radial variable.
    pub fn r() -> Expr {
        Expr::wrap(Node::Radial)
    }

    pub fn param(name: &str) -> Expr {
        Expr::wrap(Node::Param(name.to_string()))
    }

    pub fn formal(name: &str) -> Expr {
        Expr::formal_order(name, 0)
    }

    pub fn formal_order(name: &str, order: u32) -> Expr {
        Expr::wrap(Node::Formal {
            name: name.to_string(),
            order,
        })
    }

    pub fn as_const(&self) -> Option<Rational> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut c = Rational::zero();
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Const(v) => c += v,
                Node::Sum(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(v) => c += v,
                            _ => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if !c.is_zero() {
            out.push(Expr::constant(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(out)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut c = Rational::one();
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            match f.node() {
                Node::Const(v) => c *= v,
                Node::Product(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Const(v) => c *= v,
                            _ => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
            if c.is_zero() {
                return Expr::zero();
            }
        }
        if out.is_empty() {
            return Expr::constant(c);
        }
        if !c.is_one() {
            out.insert(0, Expr::constant(c));
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        Expr::wrap(Node::Product(out))
    }

    pub fn pow(&self, e: Rational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Const(b) if e.is_integer() => {
                let n = *e.numer();
                if b.is_zero() && n < 0 {
                    // leave unfolded, evaluation reports the domain error
                } else if let Ok(n) = i32::try_from(n) {
                    if n.unsigned_abs() <= 32 {
                        return Expr::constant(num_traits::pow::Pow::pow(*b, n));
                    }
                }
            }
            Node::Const(b) if b.is_one() => return Expr::one(),
            Node::Power(base, p) if e.is_integer() => return base.pow(p * e),
            _ => {}
        }
        Expr::wrap(Node::Power(self.clone(), e))
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(Rational::from_integer(n))
    }

    pub fn sqrt(&self) -> Expr {
        self.pow(q(1, 2))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn lambert_w0(&self) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        Expr::wrap(Node::LambertW0(self.clone()))
    }

    pub fn scale(&self, c: Rational) -> Expr {
        Expr::product(vec![Expr::constant(c), self.clone()])
    }

    /// Symbolic d/dr.
    pub fn deriv(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Param(_) => Expr::zero(),
            Node::Radial => Expr::one(),
            Node::Formal { name, order } => Expr::formal_order(name, order + 1),
            Node::Sum(ts) => Expr::sum(ts.iter().map(Expr::deriv).collect()),
            Node::Product(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    let di = fs[i].deriv();
                    if di.is_zero() {
                        continue;
                    }
                    let mut fac = fs.clone();
                    fac[i] = di;
                    terms.push(Expr::product(fac));
                }
                Expr::sum(terms)
            }
            Node::Power(b, e) => {
                let db = b.deriv();
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::constant(*e), b.pow(e - Rational::one()), db])
            }
            Node::LambertW0(u) => {
                let du = u.deriv();
                if du.is_zero() {
                    return Expr::zero();
                }
                let w = self.clone();
                Expr::product(vec![
                    w.clone(),
                    du,
                    u.recip(),
                    (Expr::one() + w).recip(),
                ])
            }
        }
    }

    /// Numeric value at `r` under `env`.
    pub fn eval(&self, r: f64, env: &ParamEnv) -> Result<f64> {
        match self.node() {
            Node::Const(c) => Ok(rational_to_f64(*c)),
            Node::Radial => Ok(r),
            Node::Param(n) => env.get(n),
            Node::Formal { name, order } => env.get(&formal_key(name, *order)),
            Node::Sum(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(r, env)?;
                }
                Ok(s)
            }
            Node::Product(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval(r, env)?;
                }
                Ok(p)
            }
            Node::Power(b, e) => power(b.eval(r, env)?, *e),
            Node::LambertW0(u) => w0_real(u.eval(r, env)?),
        }
    }

    /// Scale of the value before cancellation: sums become sums of magnitudes,
    /// integer powers of sums are expanded by magnitude.
    pub fn eval_magnitude(&self, r: f64, env: &ParamEnv) -> Result<f64> {
        match self.node() {
            Node::Sum(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval_magnitude(r, env)?;
                }
                Ok(s)
            }
            Node::Product(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval_magnitude(r, env)?;
                }
                Ok(p)
            }
            Node::Power(b, e) if e.is_integer() && *e.numer() > 0 => {
                Ok(b.eval_magnitude(r, env)?.powi(*e.numer() as i32))
            }
            _ => Ok(self.eval(r, env)?.abs()),
        }
    }

    /// True when the tree mentions the formal unknown `name` (any order).
    pub fn mentions_formal(&self, name: &str) -> bool {
        match self.node() {
            Node::Formal { name: n, .. } => n == name,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().any(|t| t.mentions_formal(name)),
            Node::Power(b, _) => b.mentions_formal(name),
            Node::LambertW0(u) => u.mentions_formal(name),
            _ => false,
        }
    }
}

fn rational_to_f64(c: Rational) -> f64 {
    c.to_f64().unwrap_or_else(|| *c.numer() as f64 / *c.denom() as f64)
}

fn power(b: f64, e: Rational) -> Result<f64> {
    if e.is_integer() {
        let n = *e.numer();
        if b == 0.0 && n < 0 {
            return Err(Error::DomainError("zero raised to a negative power".into()));
        }
        return Ok(match i32::try_from(n) {
            Ok(n) => b.powi(n),
            Err(_) => b.powf(n as f64),
        });
    }
    if b < 0.0 {
        return Err(Error::DomainError(format!(
            "negative base {b} under fractional power {e}"
        )));
    }
    if b == 0.0 && e.is_negative() {
        return Err(Error::DomainError("zero raised to a negative power".into()));
    }
    let (n, d) = (*e.numer(), *e.denom());
    if d == 2 {
        let s = b.sqrt();
        return Ok(match i32::try_from(n) {
            Ok(n) => s.powi(n),
            Err(_) => s.powf(n as f64),
        });
    }
    Ok(b.powf(rational_to_f64(e)))
}

/// Principal branch of the Lambert W function on nonnegative arguments.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::DomainError(format!("lambert_w0 argument {x} < 0")));
    }
    w0_real(x)
}

fn w0_real(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if x.is_nan() || x < branch {
        return Err(Error::DomainError(format!("W0 argument {x} < -1/e")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x >= 0.0 {
        x.ln_1p()
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// Numeric bindings for parameters and formal unknowns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamEnv {
    values: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.set(name, v);
        self
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundName(name.to_string()))
    }

    pub fn get_or(&self, name: &str, default: f64) -> f64 {
        self.values.get(name).copied().unwrap_or(default)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    /// Bindings of `other` override those of `self`.
    pub fn merged(&self, other: &ParamEnv) -> ParamEnv {
        let mut out = self.clone();
        for (k, v) in &other.values {
            out.values.insert(k.clone(), *v);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Binds the phase pair `sin`, `cos`.
    pub fn with_phase(self, theta: f64) -> Self {
        self.with(PHASE_SIN, theta.sin()).with(PHASE_COS, theta.cos())
    }
}

/// Parameter names of the phase pair.
pub const PHASE_SIN: &str = "sin";
pub const PHASE_COS: &str = "cos";

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::sum(vec![a, b.scale(-Rational::one())]));
binop!(Mul, mul, |a, b| Expr::product(vec![a, b]));
binop!(Div, div, |a, b| Expr::product(vec![a, b.recip()]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Rational::one())
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-Rational::one())
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(c: Rational) -> Expr {
        Expr::constant(c)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "({}/{})", c.numer(), c.denom())
                }
            }
            Node::Radial => write!(f, "r"),
            Node::Param(n) => write!(f, "{n}"),
            Node::Formal { name, order } => write!(f, "{}", formal_key(name, *order)),
            Node::Sum(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Node::Product(fs) => {
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Node::Power(b, e) => {
                if e.is_integer() {
                    write!(f, "{b}^{}", e.numer())
                } else {
                    write!(f, "{b}^({}/{})", e.numer(), e.denom())
                }
            }
            Node::LambertW0(u) => write!(f, "W0({u})"),
        }
    }
}
