//! Registry of explicit, implicit and ODE solution families together with the
//! equation each one solves and a driver that samples its residuals.

use crate::error::{Error, Result};
use crate::exterior::Form;
use crate::gauge::{
    residual_dhym, residual_dspin7, residual_holomorphic, residual_hym, residual_spin7, ConnectionAnsatz,
    Dspin7Residual, Residual, ResidualReport,
};
use crate::geometries::{bryant_salamon, calabi, eguchi_hanson, flag_ke, spin7_from_triple, Geometry};
use crate::scalar::{formal_key, q, Expr, ParamEnv, PHASE_COS, PHASE_SIN};
use crate::solvers::{
    integrate_ode_at, series_coeffs, series_eval, track_branches, tracking_grid, ExactnessConfig,
};

/// Every registered family id, in registry order.
pub const FAMILY_IDS: [&str; 34] = [
    "eh_hym_1",
    "eh_hym_2",
    "eh_hym_3",
    "eh_dhym_1",
    "eh_dhym_2",
    "eh_dhym_3",
    "flag_dhym",
    "tcp2_hyperholo",
    "tcp2_hym_1",
    "tcp2_hym_2",
    "tcp2_hym_3",
    "tcp2_spin7_1",
    "tcp2_spin7_2",
    "tcp2_spin7_3",
    "tcp2_dhym_om1",
    "tcp2_dhym_om2",
    "tcp2_dhym_om3",
    "tcp2_dspin7_phi1_hyperholo",
    "tcp2_dspin7_phi1_pfamily",
    "tcp2_dspin7_phi1_a2family",
    "tcp2_dspin7_phi2_hyperholo",
    "tcp2_dspin7_phi2_om1branch",
    "tcp2_dspin7_phi2_a4family",
    "tcp2_dspin7_phi2_a3family",
    "tcp2_dspin7_phi3_hyperholo",
    "tcp2_dspin7_phi3_om1branch",
    "tcp2_dspin7_phi3_a3family",
    "tcp2_dspin7_phi3_a4family",
    "bs_dspin7_ode",
    "cone_bs_dspin7",
    "cone_bs_spin7",
    "cone_hk_dspin7_om1comp",
    "cone_hk_dspin7_pfamily",
    "cone_hk_spin7",
];

pub fn list_families() -> Vec<&'static str> {
    FAMILY_IDS.to_vec()
}

/// Which Cayley form a Spin(7) condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cayley {
    /// `Φ_i` built from the hyperKähler triple.
    Triple(usize),
    /// The Bryant–Salamon form `Φ`.
    Bs,
}

/// The instanton condition a family satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    /// `F^{0,2} = 0` for `J_i`.
    Holomorphic(usize),
    /// Holomorphic for all three complex structures.
    HyperHolomorphic,
    /// HYM for `ω_i` with constant `lambda`.
    Hym(usize),
    /// dHYM for `ω_i` with the phase `(sin, cos)` of the family.
    Dhym(usize),
    Spin7(Cayley),
    Dspin7(Cayley),
}

impl Equation {
    pub fn label(&self) -> String {
        let cay = |c: &Cayley| match c {
            Cayley::Triple(i) => format!("phi{i}"),
            Cayley::Bs => "phi_bs".to_string(),
        };
        match self {
            Equation::Holomorphic(i) => format!("holomorphic_om{i}"),
            Equation::HyperHolomorphic => "hyperholomorphic".to_string(),
            Equation::Hym(i) => format!("hym_om{i}"),
            Equation::Dhym(i) => format!("dhym_om{i}"),
            Equation::Spin7(c) => format!("spin7_{}", cay(c)),
            Equation::Dspin7(c) => format!("dspin7_{}", cay(c)),
        }
    }

    /// The individual residual conditions checked for this equation on `g`:
    /// HYM and dHYM carry the holomorphic condition when `g` has a triple.
    pub fn components(&self, g: &Geometry) -> Vec<Equation> {
        match self {
            Equation::HyperHolomorphic => (1..=3).map(Equation::Holomorphic).collect(),
            Equation::Hym(i) | Equation::Dhym(i) if g.has_triple() => vec![*self, Equation::Holomorphic(*i)],
            _ => vec![*self],
        }
    }
}

/// Boundary value of an implicit unknown at the bolt (a right limit).
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub r0: f64,
    pub target: f64,
    pub note: String,
}

/// `Σ c_j(r) uʲ = 0` for the unknown `u`, with the connection written in terms of `u`.
#[derive(Debug, Clone)]
pub struct ImplicitSpec {
    pub family: String,
    pub unknown: String,
    /// Ascending coefficients `c_0 … c_d`.
    pub coeffs: Vec<Expr>,
    /// Bindings for every parameter the coefficients mention.
    pub env: ParamEnv,
    pub boundary: Option<Boundary>,
    /// Connection with the unknown as a formal symbol.
    pub template: ConnectionAnsatz,
}

impl ImplicitSpec {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Numeric coefficients at `r`.
    /// Coefficients at `r`; a value lost to cancellation within its own terms is set to zero.
    pub fn coeffs_at(&self, r: f64) -> Result<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|e| {
                let v = e.eval(r, &self.env)?;
                let size = e.eval_magnitude(r, &self.env)?;
                Ok(if v.abs() <= 1e-14 * size { 0.0 } else { v })
            })
            .collect()
    }
}

/// `p′ = N/D` with `N = 40r(3r²+5c)(r²+c)^{1/5}p − 2r(C²p²−k²)p` and
/// `D = (9r²+10c)C²p² + k²r² + 100r²(r²+c)^{6/5}` for `A = kθ1 + p(C2θ2+C3θ3+C4θ4)`.
#[derive(Debug, Clone)]
pub struct OdeSpec {
    pub family: String,
    pub c: f64,
    pub k: f64,
    /// `(C2, C3, C4)`.
    pub cvec: [f64; 3],
    /// Connection with `p` as a formal symbol.
    pub template: ConnectionAnsatz,
}

impl OdeSpec {
    pub fn csq(&self) -> f64 {
        self.cvec.iter().map(|x| x * x).sum()
    }

    pub fn numerator(&self, r: f64, p: f64) -> f64 {
        let (c, k) = (self.c, self.k);
        40.0 * r * (3.0 * r * r + 5.0 * c) * (r * r + c).powf(0.2) * p - 2.0 * r * (self.csq() * p * p - k * k) * p
    }

    pub fn denominator(&self, r: f64, p: f64) -> f64 {
        let (c, k) = (self.c, self.k);
        (9.0 * r * r + 10.0 * c) * self.csq() * p * p + k * k * r * r + 100.0 * r * r * (r * r + c).powf(1.2)
    }

    pub fn rhs(&self, r: f64, p: f64) -> Result<f64> {
        let d = self.denominator(r, p);
        let n = self.numerator(r, p);
        if !d.is_finite() || d.abs() <= 1e-300 || !n.is_finite() {
            return Err(Error::DenominatorVanished { r, p });
        }
        Ok(n / d)
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Closed(ConnectionAnsatz),
    Implicit(ImplicitSpec),
    Ode(OdeSpec),
}

#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub id: String,
    /// Short statement of the coefficients.
    pub description: String,
    pub geometry: Geometry,
    pub equation: Equation,
    /// Resolved parameters, including `c` and the phase pair where relevant.
    pub env: ParamEnv,
    pub payload: Payload,
}

impl SolutionFamily {
    /// Parameters merged over the geometry's own bindings.
    pub fn full_env(&self) -> ParamEnv {
        self.geometry.params.merged(&self.env)
    }
}

/// Defaults shared by every family.
pub fn global_defaults() -> ParamEnv {
    ParamEnv::new().with("c", 1.0).with("k", 1.0).with("theta", 0.0)
}

/// Family-specific defaults layered over [`global_defaults`].
pub fn family_defaults(id: &str) -> Result<ParamEnv> {
    let e = ParamEnv::new();
    let out = match id {
        "eh_hym_1" | "eh_hym_2" | "eh_hym_3" => e.with("lambda", 1.0).with("C1", 0.5).with("C2", 0.3).with("C3", 0.2),
        "eh_dhym_1" | "eh_dhym_2" | "eh_dhym_3" => e.with("theta", 0.5).with("branch", 1.0),
        "flag_dhym" => e.with("a1", 2.0).with("a3", 1.0),
        "tcp2_hym_1" | "tcp2_hym_2" | "tcp2_hym_3" => e.with("lambda", 1.0).with("C0", 0.5),
        "tcp2_spin7_1" | "tcp2_spin7_2" | "tcp2_spin7_3" => e.with("C1", 0.5).with("C2", 0.3).with("C3", 0.2),
        "tcp2_dspin7_phi1_pfamily" => e.with("C3", 1.0).with("C4", 0.5),
        "tcp2_dspin7_phi1_a2family" => e.with("C0", 2.0),
        "tcp2_dspin7_phi2_a4family"
        | "tcp2_dspin7_phi2_a3family"
        | "tcp2_dspin7_phi3_a3family"
        | "tcp2_dspin7_phi3_a4family" => e.with("C0", 1.0).with("branch", 1.0),
        "bs_dspin7_ode" => e.with("k", 0.0).with("C2", 1.0).with("C3", 0.0).with("C4", 0.0).with("a", 3.0),
        "cone_bs_dspin7" => e.with("C0", 1.0).with("C2", 1.0).with("C3", 0.0).with("C4", 0.0),
        "cone_bs_spin7" | "cone_hk_spin7" => e.with("C2", 1.0).with("C3", 0.5).with("C4", 0.2),
        "cone_hk_dspin7_om1comp" => e.with("C2", 1.0),
        "cone_hk_dspin7_pfamily" => e.with("C0", 1.0).with("C3", 1.0).with("C4", 0.0),
        _ if FAMILY_IDS.contains(&id) => e,
        _ => return Err(Error::UnknownFamily(id.to_string())),
    };
    Ok(out)
}

fn pm(n: &str) -> Expr {
    Expr::param(n)
}

fn r() -> Expr {
    Expr::r()
}

fn int(n: i64) -> Expr {
    Expr::int(n)
}

fn rp(n: i64) -> Expr {
    r().powi(n)
}

/// `r⁴ − 4c²`.
fn s_tcp2() -> Expr {
    rp(4) - int(4) * pm("c").powi(2)
}

/// `2ck/r²`.
fn hyper_a2() -> Expr {
    int(2) * pm("c") * pm("k") / rp(2)
}

fn sign_expr(s: f64) -> Expr {
    if s < 0.0 {
        int(-1)
    } else {
        int(1)
    }
}

fn branch_sign(env: &ParamEnv) -> Result<f64> {
    let b = env.get_or("branch", 1.0);
    if b == 1.0 || b == -1.0 {
        Ok(b)
    } else {
        Err(Error::BadParams(format!("branch must be ±1, got {b}")))
    }
}

fn need(env: &ParamEnv, name: &str) -> Result<f64> {
    env.get(name).map_err(|_| Error::BadParams(format!("missing parameter {name}")))
}

fn poly_mul(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let mut out = vec![Expr::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

fn poly_lin(terms: &[(Expr, &[Expr])]) -> Vec<Expr> {
    let n = terms.iter().map(|(_, p)| p.len()).max().unwrap_or(0);
    (0..n)
        .map(|j| {
            Expr::sum(
                terms
                    .iter()
                    .filter_map(|(s, p)| p.get(j).map(|c| s * c))
                    .collect(),
            )
        })
        .collect()
}

/// `sinθ(X² − Y²) − 2cosθ·XY` for polynomials `X`, `Y` in the unknown.
fn phase_poly(x: &[Expr], y: &[Expr]) -> Vec<Expr> {
    let (sin, cos) = (pm(PHASE_SIN), pm(PHASE_COS));
    let x2 = poly_mul(x, x);
    let y2 = poly_mul(y, y);
    let xy = poly_mul(x, y);
    poly_lin(&[(sin.clone(), &x2), (-&sin, &y2), (int(-2) * cos, &xy)])
}

/// Coefficients of the ω1 dHYM quartic in `a2`.
pub fn om1_quartic() -> Vec<Expr> {
    let (c, k) = (pm("c"), pm("k"));
    let p = vec![int(-2) * &c * &k, rp(2)];
    let q0 = rp(4).scale(q(-1, 4)) + c.powi(2) - k.powi(2);
    let qq = vec![q0, Expr::zero(), Expr::one()];
    phase_poly(&qq, &p)
}

/// Coefficients of the ω2 dHYM quartic in `a3` (with `a2 = 2ck/r²`, `a4 = 0`).
pub fn om2_quartic() -> Vec<Expr> {
    let (c, k) = (pm("c"), pm("k"));
    let x = vec![Expr::zero(), int(4) * rp(4) * s_tcp2().sqrt()];
    let y0 = rp(8) - int(4) * rp(4) * (c.powi(2) - k.powi(2)) - int(16) * c.powi(2) * k.powi(2);
    let y = vec![y0, Expr::zero(), int(-4) * rp(4)];
    phase_poly(&x, &y)
}

/// The Spin(7) Cayley forms and the holomorphic/(d)HYM checks of a family.
pub fn cayley_form(g: &Geometry, c: Cayley) -> Result<Form> {
    match c {
        Cayley::Triple(i) => spin7_from_triple(g, i),
        Cayley::Bs => g.spin7_form().cloned(),
    }
}

/// A symbolic residual prepared for repeated numeric evaluation.
#[derive(Debug, Clone)]
pub struct Check {
    pub equation: Equation,
    kind: CheckKind,
}

#[derive(Debug, Clone)]
enum CheckKind {
    Plain(Vec<Residual>),
    Dspin7 { res: Dspin7Residual, phi: Form },
}

impl Check {
    pub fn build(eq: Equation, a: &ConnectionAnsatz, g: &Geometry) -> Result<Check> {
        let kind = match eq {
            Equation::Holomorphic(i) => {
                let (re, im) = residual_holomorphic(a, g, i)?;
                CheckKind::Plain(vec![re, im])
            }
            Equation::HyperHolomorphic => {
                let mut v = Vec::new();
                for i in 1..=3 {
                    let (re, im) = residual_holomorphic(a, g, i)?;
                    v.extend([re, im]);
                }
                CheckKind::Plain(v)
            }
            Equation::Hym(i) => CheckKind::Plain(vec![residual_hym(a, g, i, &pm("lambda"))?]),
            Equation::Dhym(i) => CheckKind::Plain(vec![residual_dhym(a, g, i, (&pm(PHASE_SIN), &pm(PHASE_COS)))?]),
            Equation::Spin7(c) => CheckKind::Plain(vec![residual_spin7(a, &cayley_form(g, c)?, g)?]),
            Equation::Dspin7(c) => {
                let phi = cayley_form(g, c)?;
                CheckKind::Dspin7 {
                    res: residual_dspin7(a, &phi, g)?,
                    phi,
                }
            }
        };
        Ok(Check { equation: eq, kind })
    }

    /// Largest relative residual at `r`; `env` must already include the geometry's parameters.
    pub fn eval(&self, g: &Geometry, r: f64, env: &ParamEnv) -> Result<f64> {
        match &self.kind {
            CheckKind::Plain(rs) => {
                let mut m = 0.0f64;
                for x in rs {
                    m = m.max(x.relative(r, env)?);
                }
                Ok(m)
            }
            CheckKind::Dspin7 { res, phi } => {
                let first = res.first_relative(phi, g, r, env)?;
                let second = res.second.relative(r, env)?;
                Ok(first.max(second))
            }
        }
    }
}

/// Default log-spaced sample radii for a family.
pub fn default_radii(fam: &SolutionFamily, count: usize, r_max: f64) -> Vec<f64> {
    fam.geometry.sample_radii(count, r_max)
}

/// Sample every residual condition of `fam` at `radii`. Implicit families
/// are tracked first and each global branch is reported separately.
pub fn verify(fam: &SolutionFamily, radii: &[f64], tol: f64) -> Result<Vec<ResidualReport>> {
    let g = &fam.geometry;
    let env = fam.full_env();
    let comps = fam.equation.components(g);
    let mut out = Vec::new();
    match &fam.payload {
        Payload::Closed(a) => {
            for eq in comps {
                let chk = Check::build(eq, a, g)?;
                let vals = radii.iter().map(|r| chk.eval(g, *r, &env)).collect::<Result<Vec<_>>>()?;
                out.push(ResidualReport::new(&fam.id, &eq.label(), radii.to_vec(), vals, tol));
            }
        }
        Payload::Implicit(spec) => {
            let r0 = spec.boundary.as_ref().map(|b| b.r0).unwrap_or(0.0);
            let grid = tracking_grid(r0, radii);
            let branches = track_branches(spec, &grid, true)?;
            if branches.is_empty() {
                out.push(ResidualReport::new(
                    &fam.id,
                    &format!("{}[no global branch]", fam.equation.label()),
                    vec![],
                    vec![f64::INFINITY],
                    tol,
                ));
            }
            let checks = comps
                .iter()
                .map(|eq| Check::build(*eq, &spec.template, g))
                .collect::<Result<Vec<_>>>()?;
            for b in &branches {
                for chk in &checks {
                    let mut rs = Vec::new();
                    let mut vals = Vec::new();
                    for ((r, v), dv) in b.radii.iter().zip(&b.values).zip(&b.derivatives) {
                        if !radii.contains(r) {
                            continue;
                        }
                        let e = env
                            .clone()
                            .with(&formal_key(&spec.unknown, 0), *v)
                            .with(&formal_key(&spec.unknown, 1), *dv);
                        rs.push(*r);
                        vals.push(chk.eval(g, *r, &e)?);
                    }
                    let label = format!("{}[branch {}]", chk.equation.label(), b.branch);
                    out.push(ResidualReport::new(&fam.id, &label, rs, vals, tol));
                }
            }
        }
        Payload::Ode(spec) => {
            let (r_lo, rest) = radii.split_first().ok_or_else(|| Error::BadParams("empty radius list".into()))?;
            let p0 = ode_start(spec, &env, *r_lo)?;
            let curve = integrate_ode_at(spec, *r_lo, p0, rest, 1e-12)?;
            let mut pts = vec![(*r_lo, p0, spec.rhs(*r_lo, p0)?)];
            for ((r, p), dp) in curve.radii.iter().zip(&curve.values).zip(&curve.derivatives) {
                if r != r_lo {
                    pts.push((*r, *p, *dp));
                }
            }
            for eq in comps {
                let chk = Check::build(eq, &spec.template, g)?;
                let mut vals = Vec::new();
                for (r, p, dp) in &pts {
                    let e = env.clone().with("p", *p).with("p'", *dp);
                    vals.push(chk.eval(g, *r, &e)?);
                }
                let rs = pts.iter().map(|t| t.0).collect();
                out.push(ResidualReport::new(&fam.id, &eq.label(), rs, vals, tol));
            }
        }
    }
    Ok(out)
}

/// Initial value for an ODE trace at `r_lo`: the truncated series with
/// `p(0) = a` when it exists, else the parameter `p0` (default 1).
pub fn ode_start(spec: &OdeSpec, env: &ParamEnv, r_lo: f64) -> Result<f64> {
    let a = env.get_or("a", 0.0);
    match series_coeffs(spec, a, 6) {
        Ok(b) => Ok(series_eval(&b, r_lo)),
        Err(_) => Ok(env.get_or("p0", 1.0)),
    }
}

/// θ from the arctan sum `arctan a3 + arctan(a3+a1) + arctan(a3−a1)`.
pub fn phase_of_flag(a1: i64, a3: i64) -> f64 {
    let (x, y) = (a1 as f64, a3 as f64);
    y.atan() + (y + x).atan() + (y - x).atan()
}

/// `tanθ = a3(a3² − a1² − 3)/(3a3² − a1² − 1)`, `None` on the pole set.
pub fn flag_tan(a1: i64, a3: i64) -> Option<f64> {
    let num = a3 * (a3 * a3 - a1 * a1 - 3);
    let den = 3 * a3 * a3 - a1 * a1 - 1;
    (den != 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagRegion {
    Positive,
    Zero,
    Pole,
    Negative,
}

impl FlagRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlagRegion::Positive => "positive",
            FlagRegion::Zero => "zero",
            FlagRegion::Pole => "pole",
            FlagRegion::Negative => "negative",
        }
    }
}

/// Sign class of `tanθ` by exact integer arithmetic.
pub fn flag_region(a1: i64, a3: i64) -> FlagRegion {
    let num = a3 * (a3 * a3 - a1 * a1 - 3);
    let den = 3 * a3 * a3 - a1 * a1 - 1;
    if den == 0 {
        FlagRegion::Pole
    } else if num == 0 {
        FlagRegion::Zero
    } else if (num > 0) == (den > 0) {
        FlagRegion::Positive
    } else {
        FlagRegion::Negative
    }
}

fn phased(env: ParamEnv) -> Result<ParamEnv> {
    let theta = need(&env, "theta")?;
    Ok(env.with_phase(theta))
}

fn tan_of(env: &ParamEnv) -> Result<f64> {
    let theta = need(env, "theta")?;
    let (s, c) = theta.sin_cos();
    if c.abs() < 1e-15 || s.abs() < 1e-15 {
        return Err(Error::BadParams(format!("tanθ must be finite and nonzero, θ = {theta}")));
    }
    Ok(s / c)
}

fn positive(env: &ParamEnv, name: &str) -> Result<f64> {
    let v = need(env, name)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::BadParams(format!("{name} must be > 0, got {v}")))
    }
}

fn norm_of(env: &ParamEnv, names: &[&str]) -> Result<f64> {
    let mut s = 0.0;
    for n in names {
        s += need(env, n)?.powi(2);
    }
    if s > 0.0 {
        Ok(s.sqrt())
    } else {
        Err(Error::BadParams(format!("{} must not all vanish", names.join(", "))))
    }
}

struct Build {
    description: String,
    geometry: Geometry,
    equation: Equation,
    env: ParamEnv,
    payload: Payload,
}

/// Resolve `id` with `params` layered over the defaults.
pub fn instantiate(id: &str, params: &ParamEnv) -> Result<SolutionFamily> {
    let env = global_defaults().merged(&family_defaults(id)?).merged(params);
    let b = build(id, env)?;
    Ok(SolutionFamily {
        id: id.to_string(),
        description: b.description,
        geometry: b.geometry,
        equation: b.equation,
        env: b.env,
        payload: b.payload,
    })
}

fn closed(g: &Geometry, coeffs: Vec<(&str, Expr)>) -> Result<Payload> {
    Ok(Payload::Closed(ConnectionAnsatz::closed(g, coeffs)?))
}

fn build(id: &str, env: ParamEnv) -> Result<Build> {
    let (c, k) = (pm("c"), pm("k"));
    let tcp2 = |env: &ParamEnv| -> Result<Geometry> { Ok(calabi(positive(env, "c")?)) };
    let ok = |description: &str, geometry: Geometry, equation: Equation, env: ParamEnv, payload: Payload| {
        Ok(Build {
            description: description.to_string(),
            geometry,
            equation,
            env,
            payload,
        })
    };
    match id {
        "eh_hym_1" | "eh_hym_2" | "eh_hym_3" => {
            let i = (id.as_bytes()[7] - b'0') as usize;
            let g = eguchi_hanson(positive(&env, "c")?);
            let u = rp(4) - &c;
            let lam = pm("lambda");
            let f = |j: usize| -> Expr {
                let cj = pm(&format!("C{j}"));
                match (i == j, j) {
                    (true, 1) => (&lam * rp(4) + cj) / (int(4) * rp(2)),
                    (true, _) => (&lam * &u + cj) / (int(4) * u.sqrt()),
                    (false, 1) => cj / rp(2),
                    (false, _) => cj / u.sqrt(),
                }
            };
            let p = closed(&g, vec![("η1", f(1)), ("η2", f(2)), ("η3", f(3))])?;
            ok("HYM on Eguchi–Hanson: f_i = (λ(r⁴−c)+C_i)/(4√(r⁴−c)) style for the chosen ω_i, C_j/√(r⁴−c) or C_1/r² otherwise", g, Equation::Hym(i), env, p)
        }
        "eh_dhym_1" | "eh_dhym_2" | "eh_dhym_3" => {
            let i = (id.as_bytes()[8] - b'0') as usize;
            let cv = positive(&env, "c")?;
            let kv = need(&env, "k")?;
            let t = tan_of(&env)?;
            let g = eguchi_hanson(cv);
            let env = phased(env)?.with("t", t);
            let tt = pm("t");
            let sec2 = int(1) + tt.powi(2);
            let sqc = c.sqrt();
            if i == 1 {
                let lhs = 4.0 * kv * t + cv.sqrt();
                let s = if lhs > 0.0 {
                    1.0
                } else if lhs < 0.0 {
                    -1.0
                } else {
                    branch_sign(&env)?
                };
                let disc = &sec2 * rp(4) + tt.powi(2) * (int(16) * k.powi(2) - &c) + int(8) * &k * &sqc * &tt;
                let f1 = (-rp(2) + sign_expr(s) * disc.sqrt()) / (int(4) * &tt);
                let p = closed(&g, vec![("η1", f1)])?;
                return ok("dHYM for ω1 on Eguchi–Hanson, f2 = f3 = 0", g, Equation::Dhym(1), env, p);
            }
            let s = branch_sign(&env)?;
            let u = rp(4) - &c;
            let f = u.sqrt() * (-rp(2) + sign_expr(s) * (&sec2 * rp(4) + int(16) * k.powi(2) * tt.powi(2)).sqrt())
                / (int(4) * rp(2) * &tt);
            let label = if i == 2 { "η2" } else { "η3" };
            let p = closed(&g, vec![("η1", &sqc * &k / rp(2)), (label, f)])?;
            ok("dHYM for ω2/ω3 on Eguchi–Hanson, f1 = √c k/r²", g, Equation::Dhym(i), env, p)
        }
        "flag_dhym" => {
            let a1 = need(&env, "a1")?;
            let a3 = need(&env, "a3")?;
            if a1.fract() != 0.0 || a3.fract() != 0.0 {
                return Err(Error::BadParams("a1, a3 must be integers".into()));
            }
            let theta = phase_of_flag(a1 as i64, a3 as i64);
            let env = env.with("theta", theta).with_phase(theta);
            let g = flag_ke();
            let p = closed(&g, vec![("θ1", pm("a1")), ("θ3", pm("a3"))])?;
            ok("A = a1θ1 + a3θ3 on the flag manifold with θ from the arctan sum", g, Equation::Dhym(1), env, p)
        }
        "tcp2_hyperholo" => {
            let g = tcp2(&env)?;
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", hyper_a2())])?;
            ok("a2 = 2ck/r², a3 = a4 = 0", g, Equation::HyperHolomorphic, env, p)
        }
        "tcp2_hym_1" | "tcp2_hym_2" | "tcp2_hym_3" => {
            let i = (id.as_bytes()[9] - b'0') as usize;
            let g = tcp2(&env)?;
            let s = s_tcp2();
            let lam = pm("lambda");
            let c0 = pm("C0");
            let coeffs = if i == 1 {
                let a2 = (&c0 - &s * (&lam * &s - int(4) * &c * &k)) / (int(2) * rp(2) * &s);
                vec![("θ1", k.clone()), ("θ2", a2)]
            } else {
                let a = (&c0 - &lam * s.powi(2)) / (int(2) * s.pow(q(3, 2)));
                vec![("θ1", k.clone()), ("θ2", hyper_a2()), (if i == 2 { "θ3" } else { "θ4" }, a)]
            };
            let p = closed(&g, coeffs)?;
            ok("HYM on T*CP² for ω_i", g, Equation::Hym(i), env, p)
        }
        "tcp2_spin7_1" | "tcp2_spin7_2" | "tcp2_spin7_3" => {
            let i = (id.as_bytes()[11] - b'0') as usize;
            let g = tcp2(&env)?;
            let s = s_tcp2();
            let (c1, c2, c3) = (pm("C1"), pm("C2"), pm("C3"));
            let decay = s.pow(q(-3, 2));
            let coeffs = match i {
                1 => vec![
                    ("θ2", (&c1 * &s + int(2) * &c * &k) / rp(2)),
                    ("θ3", &c2 * &decay),
                    ("θ4", &c3 * &decay),
                ],
                _ => {
                    let a2 = hyper_a2() + &c1 / (rp(2) * &s);
                    let grow = s.sqrt();
                    if i == 2 {
                        vec![("θ2", a2), ("θ3", &c2 * &grow), ("θ4", &c3 * &decay)]
                    } else {
                        vec![("θ2", a2), ("θ3", &c2 * &decay), ("θ4", &c3 * &grow)]
                    }
                }
            };
            let mut all = vec![("θ1", k.clone())];
            all.extend(coeffs);
            let p = closed(&g, all)?;
            ok("Spin(7)-instanton for Φ_i on T*CP²", g, Equation::Spin7(Cayley::Triple(i)), env, p)
        }
        "tcp2_dhym_om1" => {
            let cv = positive(&env, "c")?;
            let kv = need(&env, "k")?;
            let g = calabi(cv);
            let env = phased(env)?;
            let template = ConnectionAnsatz::closed(&g, vec![("θ1", k.clone()), ("θ2", Expr::formal("a2"))])?;
            let spec = ImplicitSpec {
                family: id.to_string(),
                unknown: "a2".into(),
                coeffs: om1_quartic(),
                env: g.params.merged(&env),
                boundary: Some(Boundary {
                    r0: (2.0 * cv).sqrt(),
                    target: kv,
                    note: "a2 = k at the bolt, a double root (triple when tanθ = 2ck/(k²−c²))".into(),
                }),
                template,
            };
            ok("sinθ(Q²−P²) − 2cosθ·PQ = 0, P = a2r²−2ck, Q = a2²−r⁴/4+c²−k²", g, Equation::Dhym(1), env, Payload::Implicit(spec))
        }
        "tcp2_dhym_om2" | "tcp2_dhym_om3" => {
            let i = if id.ends_with('2') { 2 } else { 3 };
            let cv = positive(&env, "c")?;
            let g = calabi(cv);
            let env = phased(env)?;
            let label = if i == 2 { "θ3" } else { "θ4" };
            let unknown = if i == 2 { "a3" } else { "a4" };
            let template = ConnectionAnsatz::closed(
                &g,
                vec![("θ1", k.clone()), ("θ2", hyper_a2()), (label, Expr::formal(unknown))],
            )?;
            let spec = ImplicitSpec {
                family: id.to_string(),
                unknown: unknown.into(),
                coeffs: om2_quartic(),
                env: g.params.merged(&env),
                boundary: Some(Boundary {
                    r0: (2.0 * cv).sqrt(),
                    target: 0.0,
                    note: "vanishes at the bolt as a quadruple root".into(),
                }),
                template,
            };
            ok(
                "sinθ(X²−Y²) − 2cosθ·XY = 0, X = 4ar⁴√(r⁴−4c²), Y = r⁸−4r⁴(a²+c²−k²)−16c²k²",
                g,
                Equation::Dhym(i),
                env,
                Payload::Implicit(spec),
            )
        }
        "tcp2_dspin7_phi1_hyperholo" | "tcp2_dspin7_phi2_hyperholo" | "tcp2_dspin7_phi3_hyperholo" => {
            let i = (id.as_bytes()[15] - b'0') as usize;
            let g = tcp2(&env)?;
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", hyper_a2())])?;
            ok("hyper-holomorphic a2 = 2ck/r²", g, Equation::Dspin7(Cayley::Triple(i)), env, p)
        }
        "tcp2_dspin7_phi1_pfamily" => {
            let g = tcp2(&env)?;
            norm_of(&env, &["C3", "C4"])?;
            let cn = (pm("C3").powi(2) + pm("C4").powi(2)).sqrt();
            let pp = ((rp(4) + int(4) * k.powi(2)) * s_tcp2()).sqrt() / (int(2) * rp(2) * cn);
            let p = closed(
                &g,
                vec![("θ1", k.clone()), ("θ2", hyper_a2()), ("θ3", pm("C3") * &pp), ("θ4", pm("C4") * &pp)],
            )?;
            ok("a3 = C3p, a4 = C4p, p = √((r⁴+4k²)(r⁴−4c²))/(2r²√(C3²+C4²))", g, Equation::Dspin7(Cayley::Triple(1)), env, p)
        }
        "tcp2_dspin7_phi1_a2family" => {
            let cv = positive(&env, "c")?;
            let (kv, cc) = (need(&env, "k")?, need(&env, "C0")?);
            let g = calabi(cv);
            let s = if cv * cc >= kv { -1.0 } else { 1.0 };
            let cp = pm("C0");
            let disc = cp.powi(2) * rp(4) - int(8) * &cp * &c * &k + rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2);
            let a2 = (&cp * rp(2) + sign_expr(s) * disc.sqrt()).scale(q(1, 2));
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", a2)])?;
            ok("a2 = ½Cr² ∓ ½√(C²r⁴−8Cck+r⁴−4c²+4k²) with C = C0", g, Equation::Dspin7(Cayley::Triple(1)), env, p)
        }
        "tcp2_dspin7_phi2_om1branch" | "tcp2_dspin7_phi3_om1branch" => {
            let i = (id.as_bytes()[15] - b'0') as usize;
            let g = tcp2(&env)?;
            let s = if need(&env, "k")? >= 0.0 { 1.0 } else { -1.0 };
            let a2 = sign_expr(s) * (rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2)).sqrt().scale(q(1, 2));
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", a2)])?;
            ok("a2 = ±½√(r⁴−4c²+4k²), a3 = a4 = 0", g, Equation::Dspin7(Cayley::Triple(i)), env, p)
        }
        "tcp2_dspin7_phi2_a4family" | "tcp2_dspin7_phi3_a3family" => {
            let i = (id.as_bytes()[15] - b'0') as usize;
            let g = tcp2(&env)?;
            let sgn = branch_sign(&env)?;
            let cp = pm("C0");
            let s = s_tcp2();
            let root = (cp.powi(2) * (rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2)) + rp(4) + int(4) * k.powi(2)).sqrt();
            let num = int(4) * &cp * &c * &k + sign_expr(sgn) * rp(2) * root;
            let den = int(-2) * cp.powi(2) * &s - int(2) * rp(4);
            let a = num / den * s.sqrt();
            let a2 = hyper_a2() + &cp * &a * s.sqrt() / rp(2);
            let label = if i == 2 { "θ4" } else { "θ3" };
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", a2), (label, a)])?;
            ok("a2 = 2ck/r² + C·a·√(r⁴−4c²)/r² with the quadratic branch a, C = C0", g, Equation::Dspin7(Cayley::Triple(i)), env, p)
        }
        "tcp2_dspin7_phi2_a3family" | "tcp2_dspin7_phi3_a4family" => {
            let i = (id.as_bytes()[15] - b'0') as usize;
            let g = tcp2(&env)?;
            let sgn = branch_sign(&env)?;
            let cp = pm("C0");
            let root = ((cp.powi(2) + int(1)) * rp(4) + int(4) * k.powi(2)).sqrt();
            let a = (&cp * rp(2) + sign_expr(sgn) * root) / (int(2) * rp(2)) * s_tcp2().sqrt();
            let label = if i == 2 { "θ3" } else { "θ4" };
            let p = closed(&g, vec![("θ1", k.clone()), ("θ2", hyper_a2()), (label, a)])?;
            ok("a = (Cr² ± √((C²+1)r⁴+4k²))/(2r²)·√(r⁴−4c²), C = C0", g, Equation::Dspin7(Cayley::Triple(i)), env, p)
        }
        "bs_dspin7_ode" => {
            let cv = need(&env, "c")?;
            if cv < 0.0 {
                return Err(Error::BadParams(format!("c must be ≥ 0, got {cv}")));
            }
            let g = bryant_salamon(cv);
            let cvec = [need(&env, "C2")?, need(&env, "C3")?, need(&env, "C4")?];
            let pf = Expr::formal("p");
            let template = ConnectionAnsatz::closed(
                &g,
                vec![
                    ("θ1", k.clone()),
                    ("θ2", pm("C2") * &pf),
                    ("θ3", pm("C3") * &pf),
                    ("θ4", pm("C4") * &pf),
                ],
            )?;
            let spec = OdeSpec {
                family: id.to_string(),
                c: cv,
                k: need(&env, "k")?,
                cvec,
                template,
            };
            ok("A = kθ1 + p(C2θ2+C3θ3+C4θ4) with p′ = N/D", g, Equation::Dspin7(Cayley::Bs), env, Payload::Ode(spec))
        }
        "cone_bs_dspin7" => {
            let env = env.with("c", 0.0).with("k", 0.0);
            positive(&env, "C0")?;
            norm_of(&env, &["C2", "C3", "C4"])?;
            let g = bryant_salamon(0.0);
            let cn = (pm("C2").powi(2) + pm("C3").powi(2) + pm("C4").powi(2)).sqrt();
            let w = (pm("C0") * r().pow(q(128, 45))).lambert_w0();
            let pp = int(10) * r().pow(q(6, 5)) / (int(3) * w.sqrt() * cn);
            let p = closed(&g, vec![("θ2", pm("C2") * &pp), ("θ3", pm("C3") * &pp), ("θ4", pm("C4") * &pp)])?;
            ok("p = 10r^{6/5}/(3√W(C0 r^{128/45}))/|C| on the Spin(7) cone", g, Equation::Dspin7(Cayley::Bs), env, p)
        }
        "cone_bs_spin7" => {
            let env = env.with("c", 0.0).with("k", 0.0);
            let g = bryant_salamon(0.0);
            let grow = r().pow(q(6, 5));
            let p = closed(&g, vec![("θ2", pm("C2") * &grow), ("θ3", pm("C3") * &grow), ("θ4", pm("C4") * &grow)])?;
            ok("A = r^{6/5}(C2θ2+C3θ3+C4θ4) on the Spin(7) cone", g, Equation::Spin7(Cayley::Bs), env, p)
        }
        "cone_hk_dspin7_om1comp" => {
            let env = env.with("c", 0.0).with("k", 0.0);
            let g = calabi(0.0);
            let p = closed(&g, vec![("θ2", pm("C2") * rp(2))])?;
            ok("A = C2r²θ2 on the hyperKähler cone", g, Equation::Dspin7(Cayley::Triple(1)), env, p)
        }
        "cone_hk_dspin7_pfamily" => {
            let env = env.with("c", 0.0).with("k", 0.0);
            norm_of(&env, &["C3", "C4"])?;
            let g = calabi(0.0);
            let cn = (pm("C3").powi(2) + pm("C4").powi(2)).sqrt();
            let pf = Expr::formal("p");
            let template = ConnectionAnsatz::closed(
                &g,
                vec![
                    ("θ3", pm("C3") * &pf / (int(2) * &cn)),
                    ("θ4", pm("C4") * &pf / (int(2) * &cn)),
                ],
            )?;
            let spec = ImplicitSpec {
                family: id.to_string(),
                unknown: "p".into(),
                coeffs: vec![-pm("C0") / rp(2), -rp(4), Expr::zero(), Expr::one()],
                env: g.params.merged(&env),
                boundary: None,
                template,
            };
            ok("p³ − r⁴p − C0/r² = 0, A = p(C3θ3+C4θ4)/(2√(C3²+C4²))", g, Equation::Dspin7(Cayley::Triple(1)), env, Payload::Implicit(spec))
        }
        "cone_hk_spin7" => {
            let env = env.with("c", 0.0).with("k", 0.0);
            let g = calabi(0.0);
            let p = closed(
                &g,
                vec![("θ2", pm("C2") * rp(2)), ("θ3", pm("C3") / rp(6)), ("θ4", pm("C4") / rp(6))],
            )?;
            ok("A = C2r²θ2 + (C3θ3+C4θ4)/r⁶ on the hyperKähler cone", g, Equation::Spin7(Cayley::Triple(1)), env, p)
        }
        _ => Err(Error::UnknownFamily(id.to_string())),
    }
}

/// A first integral, the ODE it should integrate, and where to sample them.
#[derive(Debug, Clone)]
pub struct ExactnessPair {
    pub name: &'static str,
    pub ode: Expr,
    pub first_integral: Expr,
    pub config: ExactnessConfig,
}

fn exact_cfg(unknown: &str, env: ParamEnv, r_range: (f64, f64)) -> ExactnessConfig {
    ExactnessConfig {
        unknown: unknown.to_string(),
        env,
        r_range,
        a_range: (-2.0, 2.0),
        samples: 40,
        seed: 7,
    }
}

/// The four (first integral, ODE) pairs: the Eguchi–Hanson ω1 dHYM case, the
/// T*CP² ω1 and ω2 dHYM quartics, and the Φ1 deformed Spin(7) `p` equation.
/// The last two ODEs are the residuals computed by the gauge module.
pub fn exactness_pairs() -> Result<Vec<ExactnessPair>> {
    let (c, k, t) = (pm("c"), pm("k"), pm("t"));
    let theta = 0.7f64;
    let base = ParamEnv::new().with("c", 1.0).with("k", 3.0).with("t", theta.tan()).with_phase(theta);
    let mut out = Vec::new();

    // Eguchi–Hanson: 2t f² + r² f − (t/8)(r⁴ − 16(C2²+C3²)/(r⁴−c)).
    let f = Expr::formal("f1");
    let cs = pm("C2").powi(2) + pm("C3").powi(2);
    let u = rp(4) - &c;
    let fi = int(2) * &t * f.powi(2) + rp(2) * &f
        - (&t * (rp(4) - int(16) * &cs / &u)).scale(q(1, 8));
    let ode = int(2) * (rp(2) + int(4) * &f * &t) * Expr::formal_order("f1", 1) + int(4) * r() * &f
        - rp(3) * (int(1) + int(16) * &cs / u.powi(2)) * &t;
    let env = base.clone().with("C2", 0.3).with("C3", 0.4);
    out.push(ExactnessPair {
        name: "eh_dhym_1",
        ode,
        first_integral: fi,
        config: exact_cfg("f1", env, (1.1, 4.0)),
    });

    // T*CP², ω1 quartic.
    let a = Expr::formal("a2");
    let ap = Expr::formal_order("a2", 1);
    let m = rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2);
    let ck = &c * &k;
    let fi = int(2) * &t * a.powi(4) - int(4) * rp(2) * a.powi(3)
        - ((int(3) * rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2)) * &t - int(8) * &ck) * a.powi(2)
        + rp(2) * (&m + int(8) * &ck * &t) * &a
        + &t * (rp(4).scale(q(1, 8)) - c.powi(2) + k.powi(2)) * rp(4)
        - int(2) * &ck * rp(4);
    let lin = (int(6) * rp(4) - int(8) * c.powi(2) + int(8) * k.powi(2)) * &t - int(16) * &ck;
    let ode = (int(8) * &t * a.powi(3) - int(12) * a.powi(2) * rp(2) - &lin * &a + rp(2) * (&m + int(8) * &ck * &t)) * &ap
        - int(8) * r() * a.powi(3)
        - int(12) * rp(3) * a.powi(2) * &t
        + (int(6) * rp(5) - int(8) * c.powi(2) * r() + int(8) * k.powi(2) * r() + int(16) * &ck * r() * &t) * &a
        + (&t * (rp(4) - int(4) * c.powi(2) + int(4) * k.powi(2)) - int(8) * &ck) * rp(3);
    out.push(ExactnessPair {
        name: "tcp2_dhym_om1",
        ode,
        first_integral: fi,
        config: exact_cfg("a2", base.clone(), (1.6, 4.0)),
    });

    // T*CP², ω2 quartic against the gauge residual.
    let g = calabi(1.0);
    let a = Expr::formal("a3");
    let s = s_tcp2();
    let fi = int(16) * &t * a.powi(4) - int(32) * s.sqrt() * a.powi(3)
        - int(24) * &t * &s * (int(1) + int(4) * k.powi(2) / (int(3) * rp(4))) * a.powi(2)
        + (int(32) * k.powi(2) / rp(4) + int(8)) * s.pow(q(3, 2)) * &a
        + &t * (s.powi(2)
            + int(8) * k.powi(2) / rp(8)
                * (rp(4) * (rp(8) + int(16) * c.powi(4)) - int(16) * c.powi(2) * k.powi(2) * (rp(4) - int(2) * c.powi(2))));
    let tpl = ConnectionAnsatz::closed(&g, vec![("θ1", k.clone()), ("θ2", hyper_a2()), ("θ3", a.clone())])?;
    let res = residual_dhym(&tpl, &g, 2, (&pm(PHASE_SIN), &pm(PHASE_COS)))?;
    let ode = res.form.coeff(g.metric.mask());
    out.push(ExactnessPair {
        name: "tcp2_dhym_om2",
        ode,
        first_integral: fi,
        config: exact_cfg("a3", base.clone(), (1.6, 4.0)),
    });

    // Φ1, p family: s^{1/2}(C3²+C4²)p³ − (r⁴+4k²)s^{3/2}p/(4r⁴).
    let p = Expr::formal("p");
    let cs = pm("C3").powi(2) + pm("C4").powi(2);
    let fi = s.sqrt() * &cs * p.powi(3) - (rp(4) + int(4) * k.powi(2)) * s.pow(q(3, 2)) * &p / (int(4) * rp(4));
    let tpl = ConnectionAnsatz::closed(
        &g,
        vec![("θ1", k.clone()), ("θ2", hyper_a2()), ("θ3", pm("C3") * &p), ("θ4", pm("C4") * &p)],
    )?;
    let phi = spin7_from_triple(&g, 1)?;
    let res = residual_dspin7(&tpl, &phi, &g)?;
    let ode = res.second.form.coeff_of(&["dr", "θ3"]);
    out.push(ExactnessPair {
        name: "tcp2_dspin7_phi1_pfamily",
        ode,
        first_integral: fi,
        config: exact_cfg("p", base.with("C3", 0.6).with("C4", 0.8), (1.6, 4.0)),
    });
    Ok(out)
}
