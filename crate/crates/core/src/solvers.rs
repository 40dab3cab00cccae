//! Real roots of small polynomials, branch continuation in `r`, adaptive
//! Runge–Kutta integration, power-series recurrences and exactness checks.

use nalgebra::{Complex, DMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::catalog::{ImplicitSpec, OdeSpec};
use crate::error::{Error, Result};
use crate::scalar::{formal_key, Expr, ParamEnv};

/// Relative distance below which eigenvalues are merged into one root.
/// A triple root scatters like `ε^{1/3}` under rounding, hence the loose value.
pub const CLUSTER_TOL: f64 = 2e-5;

/// Clustering tolerance used while tracking, where distinct nearby roots must stay apart.
pub const TRACK_CLUSTER_TOL: f64 = 1e-9;

/// A real root with its estimated multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: usize,
}

/// `Σ c_j x^j`.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_eval_c(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + Complex::new(*c, 0.0);
    }
    (p, dp)
}

/// Drop exactly-zero leading coefficients.
fn trim(coeffs: &[f64]) -> Result<&[f64]> {
    if coeffs.iter().all(|c| *c == 0.0) || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateAllZero);
    }
    let mut d = coeffs.len() - 1;
    while d > 0 && coeffs[d] == 0.0 {
        d -= 1;
    }
    Ok(&coeffs[..=d])
}

/// All complex roots of `Σ c_j x^j` (ascending coefficients), polished by Newton steps.
pub fn poly_complex_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let c = trim(coeffs)?;
    let d = c.len() - 1;
    if d == 0 {
        return Ok(vec![]);
    }
    let monic: Vec<f64> = c.iter().map(|x| x / c[d]).collect();
    let scale = (0..d)
        .map(|j| monic[j].abs().powf(1.0 / (d - j) as f64))
        .fold(0.0f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    for j in 0..d {
        m[(j, d - 1)] = -monic[j] / scale.powi((d - j) as i32);
    }
    let mut roots: Vec<Complex<f64>> = m.complex_eigenvalues().iter().map(|z| z * scale).collect();
    for z in roots.iter_mut() {
        let (mut p, _) = poly_eval_c(c, *z);
        for _ in 0..8 {
            let (_, dp) = poly_eval_c(c, *z);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = *z - p / dp;
            let (pc, _) = poly_eval_c(c, cand);
            if pc.norm() < p.norm() {
                *z = cand;
                p = pc;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Sorted real roots with multiplicity estimates.
pub fn poly_real_roots(coeffs: &[f64]) -> Result<Vec<RealRoot>> {
    poly_real_roots_tol(coeffs, CLUSTER_TOL)
}

/// As [`poly_real_roots`] with an explicit clustering tolerance.
pub fn poly_real_roots_tol(coeffs: &[f64], tol: f64) -> Result<Vec<RealRoot>> {
    let roots = poly_complex_roots(coeffs)?;
    let n = roots.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn find(g: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let near = (roots[i] - roots[j]).norm() <= tol * (1.0 + roots[i].norm().max(roots[j].norm()));
            if near {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                group[a] = b;
            }
        }
    }
    let mut out = Vec::new();
    for root in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| find(&mut group, i) == root).collect();
        if members.is_empty() {
            continue;
        }
        let centroid = members.iter().map(|&i| roots[i]).sum::<Complex<f64>>() / members.len() as f64;
        if centroid.im.abs() <= tol * (1.0 + centroid.norm()) {
            let value = if members.len() > 1 {
                refine_multiple(coeffs, centroid.re, members.len())
            } else {
                centroid.re
            };
            out.push(RealRoot {
                value,
                multiplicity: members.len(),
            });
        }
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// Newton on the `(m−1)`-th derivative, where an `m`-fold root is simple.
fn refine_multiple(coeffs: &[f64], x0: f64, m: usize) -> f64 {
    let mut d: Vec<f64> = coeffs.to_vec();
    for _ in 0..m - 1 {
        d = (1..d.len()).map(|j| j as f64 * d[j]).collect();
    }
    if d.len() < 2 {
        return x0;
    }
    let dd: Vec<f64> = (1..d.len()).map(|j| j as f64 * d[j]).collect();
    let mut x = x0;
    for _ in 0..20 {
        let den = poly_eval(&dd, x);
        if den == 0.0 {
            break;
        }
        let step = poly_eval(&d, x) / den;
        if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x0.abs()) {
            return x0;
        }
        x -= step;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// `lead^{2d−2} Π_{i<j} (z_i − z_j)²` from the complex roots.
pub fn discriminant(coeffs: &[f64]) -> Result<f64> {
    let c = trim(coeffs)?;
    let d = c.len() - 1;
    let roots = poly_complex_roots(c)?;
    let mut prod = Complex::new(c[d].powi(2 * d as i32 - 2), 0.0);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let diff = roots[i] - roots[j];
            prod *= diff * diff;
        }
    }
    Ok(prod.re)
}

/// One continuously tracked real root (or ODE trajectory) on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchCurve {
    pub family: String,
    pub branch: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `d value / dr` at each radius (implicit differentiation or the ODE right-hand side).
    pub derivatives: Vec<f64>,
    /// The right-limit at the boundary radius equals the boundary value.
    pub boundary_match: bool,
    /// Exists on the whole grid and satisfies the boundary condition, if any.
    pub global: bool,
    /// Polynomial discriminant at each radius (empty for ODE traces).
    pub discriminant: Vec<f64>,
}

/// Numeric polynomial of an implicit family at fixed `r`.
struct Poly<'a> {
    spec: &'a ImplicitSpec,
    derivs: Vec<Expr>,
}

impl<'a> Poly<'a> {
    fn new(spec: &'a ImplicitSpec) -> Poly<'a> {
        let derivs = spec.coeffs.iter().map(Expr::deriv).collect();
        Poly { spec, derivs }
    }

    fn coeffs(&self, r: f64) -> Result<Vec<f64>> {
        self.spec.coeffs.iter().map(|e| e.eval(r, &self.spec.env)).collect()
    }

    /// `a′ = −∂_r P / ∂_a P`.
    fn slope(&self, r: f64, a: f64) -> Result<f64> {
        let c = self.coeffs(r)?;
        let dc: Vec<f64> = self.derivs.iter().map(|e| e.eval(r, &self.spec.env)).collect::<Result<_>>()?;
        let pr = poly_eval(&dc, a);
        let pa: f64 = (1..c.len()).map(|j| j as f64 * c[j] * a.powi(j as i32 - 1)).sum();
        Ok(-pr / pa)
    }

    fn roots(&self, r: f64) -> Result<Vec<f64>> {
        let c = self.coeffs(r)?;
        let mut out = Vec::new();
        for root in poly_real_roots_tol(&c, TRACK_CLUSTER_TOL)? {
            for _ in 0..root.multiplicity {
                out.push(root.value);
            }
        }
        Ok(out)
    }
}

struct Active {
    id: usize,
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl Active {
    fn predict(&self, r: f64) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return self.values[n - 1];
        }
        let (r1, r2) = (self.radii[n - 2], self.radii[n - 1]);
        let (v1, v2) = (self.values[n - 2], self.values[n - 1]);
        v2 + (v2 - v1) * (r - r2) / (r2 - r1)
    }
}

/// Best injective matching of branches to roots; ambiguous when the runner-up
/// (up to equal root values) costs less than 1.2 times the best.
fn assign(preds: &[f64], roots: &[f64]) -> (Vec<Option<usize>>, bool) {
    let n = preds.len();
    let m = roots.len();
    let take = n.min(m);
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    let mut second = f64::INFINITY;
    let mut current = vec![None; n];
    let mut used = vec![false; m];
    fn rec(
        b: usize,
        taken: usize,
        take: usize,
        preds: &[f64],
        roots: &[f64],
        cur: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<Option<usize>>)>,
        second: &mut f64,
    ) {
        let n = preds.len();
        if b == n {
            if taken != take {
                return;
            }
            let cost: f64 = (0..n)
                .filter_map(|i| cur[i].map(|j| (preds[i] - roots[j]).abs()))
                .sum();
            let pairs = |asg: &[Option<usize>]| {
                let mut v: Vec<(f64, f64)> = (0..n)
                    .filter_map(|i| asg[i].map(|j| (preds[i], roots[j])))
                    .collect();
                v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
                v
            };
            let close = |x: f64, y: f64| (x - y).abs() <= CLUSTER_TOL * (1.0 + x.abs());
            match best {
                Some((bc, bv)) => {
                    let same = pairs(bv)
                        .iter()
                        .zip(pairs(cur).iter())
                        .all(|(x, y)| close(x.0, y.0) && close(x.1, y.1));
                    if same {
                        return;
                    }
                    if cost < *bc {
                        *second = *bc;
                        *best = Some((cost, cur.clone()));
                    } else if cost < *second {
                        *second = cost;
                    }
                }
                None => *best = Some((cost, cur.clone())),
            }
            return;
        }
        if n - b > take - taken {
            cur[b] = None;
            rec(b + 1, taken, take, preds, roots, cur, used, best, second);
        }
        if taken < take {
            for j in 0..roots.len() {
                if !used[j] {
                    used[j] = true;
                    cur[b] = Some(j);
                    rec(b + 1, taken + 1, take, preds, roots, cur, used, best, second);
                    used[j] = false;
                    cur[b] = None;
                }
            }
        }
    }
    rec(0, 0, take, preds, roots, &mut current, &mut used, &mut best, &mut second);
    let (cost, a) = best.unwrap_or((0.0, vec![None; n]));
    let scale: f64 = preds.iter().map(|p| p.abs()).sum::<f64>() + 1.0;
    let ambiguous = second.is_finite() && cost > 1e-12 * scale && second < 1.2 * cost;
    (a, ambiguous)
}

const MAX_REFINE: usize = 30;

/// Follow every real root of `spec` across `grid` by nearest-value continuation.
/// With `boundary_filter` only the global branches are returned.
pub fn track_branches(spec: &ImplicitSpec, grid: &[f64], boundary_filter: bool) -> Result<Vec<BranchCurve>> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParams("grid must be strictly increasing with at least 2 points".into()));
    }
    let poly = Poly::new(spec);
    let mut next_id = 0;
    let mut active: Vec<Active> = Vec::new();
    let mut finished: Vec<Active> = Vec::new();
    let mut start_roots = poly.roots(grid[0])?;
    start_roots.sort_by(f64::total_cmp);
    for v in start_roots {
        active.push(Active {
            id: next_id,
            radii: vec![grid[0]],
            values: vec![v],
        });
        next_id += 1;
    }
    let mut disc = vec![(grid[0], discriminant(&poly.coeffs(grid[0])?)?)];
    let mut r_prev = grid[0];
    for &r_target in &grid[1..] {
        let mut stack = vec![r_target];
        let mut refinements = 0;
        while let Some(&r) = stack.last() {
            let roots = poly.roots(r)?;
            let preds: Vec<f64> = active.iter().map(|a| a.predict(r)).collect();
            let (assignment, ambiguous) = assign(&preds, &roots);
            if ambiguous && refinements < MAX_REFINE {
                stack.push((r * r_prev).sqrt());
                refinements += 1;
                continue;
            }
            if ambiguous {
                return Err(Error::BranchAmbiguity(r));
            }
            let mut kept = Vec::new();
            let mut used = vec![false; roots.len()];
            for (mut a, slot) in active.drain(..).zip(assignment) {
                match slot {
                    Some(j) => {
                        used[j] = true;
                        a.radii.push(r);
                        a.values.push(roots[j]);
                        kept.push(a);
                    }
                    None => finished.push(a),
                }
            }
            for (j, v) in roots.iter().enumerate() {
                if !used[j] {
                    kept.push(Active {
                        id: next_id,
                        radii: vec![r],
                        values: vec![*v],
                    });
                    next_id += 1;
                }
            }
            active = kept;
            disc.push((r, discriminant(&poly.coeffs(r)?)?));
            r_prev = r;
            stack.pop();
        }
    }
    finished.extend(active);
    finished.sort_by_key(|a| a.id);
    let last = *grid.last().expect("grid nonempty");
    let mut out = Vec::new();
    for a in finished {
        let boundary_match = match &spec.boundary {
            Some(b) => a.radii[0] == grid[0] && a.values.len() >= 3 && {
                let a0 = puiseux_limit(b.r0, &a.radii[..3], &a.values[..3]);
                (a0 - b.target).abs() <= 1e-6 * (1.0 + b.target.abs())
            },
            None => a.radii[0] == grid[0],
        };
        let global = boundary_match && *a.radii.last().expect("nonempty") == last;
        if boundary_filter && !global {
            continue;
        }
        let derivatives = a
            .radii
            .iter()
            .zip(&a.values)
            .map(|(r, v)| poly.slope(*r, *v))
            .collect::<Result<Vec<_>>>()?;
        let discriminant = a
            .radii
            .iter()
            .map(|r| disc.iter().find(|(x, _)| x == r).map(|(_, d)| *d).unwrap_or(f64::NAN))
            .collect();
        out.push(BranchCurve {
            family: spec.family.clone(),
            branch: a.id,
            radii: a.radii,
            values: a.values,
            derivatives,
            boundary_match,
            global,
            discriminant,
        });
    }
    Ok(out)
}

/// Value at `r0` of the fit `a0 + b√(r−r0) + c(r−r0)` through three points.
pub fn puiseux_limit(r0: f64, radii: &[f64], values: &[f64]) -> f64 {
    let m = DMatrix::from_fn(3, 3, |i, j| {
        let t = radii[i] - r0;
        match j {
            0 => 1.0,
            1 => t.max(0.0).sqrt(),
            _ => t,
        }
    });
    let rhs = nalgebra::DVector::from_column_slice(values);
    m.lu().solve(&rhs).map(|x| x[0]).unwrap_or(f64::NAN)
}

/// Grid for tracking an implicit family: three right-limit points at
/// `r0(1+1e−6)`, `r0(1+1e−5)`, `r0(1+1e−4)` followed by `samples`.
pub fn tracking_grid(r0: f64, samples: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = if r0 > 0.0 {
        [1e-6, 1e-5, 1e-4].iter().map(|e| r0 * (1.0 + e)).collect()
    } else {
        vec![]
    };
    for s in samples {
        if g.last().is_none_or(|l| s > l) {
            g.push(*s);
        }
    }
    g
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: fifth-order value and error estimate.
fn dp_step<F: Fn(f64, f64) -> Result<f64>>(f: &F, r: f64, y: f64, h: f64) -> Result<(f64, f64)> {
    let mut k = [0.0; 7];
    for s in 0..7 {
        let ys = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        k[s] = f(r + C[s] * h, ys)?;
    }
    let y5 = y + h * (0..7).map(|s| B5[s] * k[s]).sum::<f64>();
    let y4 = y + h * (0..7).map(|s| B4[s] * k[s]).sum::<f64>();
    Ok((y5, y5 - y4))
}

/// Adaptive Dormand–Prince integration of `y′ = f(r, y)` from `(r0, y0)`.
/// Every point of `stops` (increasing, beyond `r0`) is hit exactly and
/// recorded; all accepted steps are returned as `(r, y)`.
pub fn dopri<F: Fn(f64, f64) -> Result<f64>>(f: &F, r0: f64, y0: f64, stops: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(r0, y0)];
    let Some(&r_end) = stops.last() else {
        return Ok(out);
    };
    let (mut r, mut y) = (r0, y0);
    let mut h = (r_end - r0) * 1e-3;
    let mut next = 0;
    while next < stops.len() {
        let target = stops[next];
        if target <= r {
            next += 1;
            continue;
        }
        let hit = r + h >= target;
        let step = if hit { target - r } else { h };
        if step <= 1e-14 * r.abs().max(1.0) {
            return Err(Error::StepFailure(r));
        }
        let (y_new, err) = dp_step(f, r, y, step)?;
        let scale = tol * (1.0 + y.abs().max(y_new.abs()));
        let ratio = err.abs() / scale;
        if ratio <= 1.0 && y_new.is_finite() {
            r = if hit { target } else { r + step };
            y = y_new;
            out.push((r, y));
            if hit {
                next += 1;
            }
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = step * factor;
        if !y_new.is_finite() {
            h = step * 0.2;
        }
    }
    Ok(out)
}

/// Fixed-step fifth-order Dormand–Prince integration with `steps` steps.
pub fn rk_fixed<F: Fn(f64, f64) -> Result<f64>>(f: &F, r0: f64, y0: f64, r1: f64, steps: usize) -> Result<f64> {
    let h = (r1 - r0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        y = dp_step(f, r0 + i as f64 * h, y, h)?.0;
    }
    Ok(y)
}

/// Adaptive trace of an ODE family from `(r0, p0)` to `r_max`.
pub fn integrate_ode(spec: &OdeSpec, r0: f64, p0: f64, r_max: f64, tol: f64) -> Result<BranchCurve> {
    if r0 <= 0.0 || r_max <= r0 {
        return Err(Error::BadParams(format!("need 0 < r0 < r_max, got {r0}, {r_max}")));
    }
    let f = |r: f64, p: f64| spec.rhs(r, p);
    let trace = dopri(&f, r0, p0, &[r_max], tol)?;
    curve_from_trace(spec, trace)
}

/// As [`integrate_ode`] but sampled exactly on `radii` (dense output).
pub fn integrate_ode_at(spec: &OdeSpec, r0: f64, p0: f64, radii: &[f64], tol: f64) -> Result<BranchCurve> {
    let f = |r: f64, p: f64| spec.rhs(r, p);
    let trace = dopri(&f, r0, p0, radii, tol)?;
    let kept: Vec<(f64, f64)> = trace
        .into_iter()
        .filter(|(r, _)| radii.iter().any(|x| x == r))
        .collect();
    curve_from_trace(spec, kept)
}

fn curve_from_trace(spec: &OdeSpec, trace: Vec<(f64, f64)>) -> Result<BranchCurve> {
    let derivatives = trace.iter().map(|(r, p)| spec.rhs(*r, *p)).collect::<Result<Vec<_>>>()?;
    Ok(BranchCurve {
        family: spec.family.clone(),
        branch: 0,
        radii: trace.iter().map(|t| t.0).collect(),
        values: trace.iter().map(|t| t.1).collect(),
        derivatives,
        boundary_match: false,
        global: false,
        discriminant: vec![],
    })
}

fn series_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|m| (0..=m).map(|j| a.get(j).copied().unwrap_or(0.0) * b.get(m - j).copied().unwrap_or(0.0)).sum())
        .collect()
}

/// Taylor coefficients of `(x + c)^α` in `x`.
fn binomial_series(c: f64, alpha: f64, n: usize) -> Vec<f64> {
    let mut out = vec![c.powf(alpha)];
    for j in 1..=n {
        let prev = out[j - 1];
        out.push(prev * (alpha - (j - 1) as f64) / (j as f64 * c));
    }
    out
}

/// Coefficients `b_0 … b_order` of the even series `p = Σ b_n r^{2n}` with `p(0) = a`.
pub fn series_coeffs(spec: &OdeSpec, a: f64, order: usize) -> Result<Vec<f64>> {
    let (c, k2, cc) = (spec.c, spec.k * spec.k, spec.csq());
    let lead = 10.0 * c * cc * a * a;
    if a == 0.0 || lead == 0.0 {
        return Err(Error::SingularCoefficient(format!(
            "leading coefficient 10cC²a² vanishes (a = {a}, c = {c}, C² = {cc})"
        )));
    }
    let w15 = binomial_series(c, 0.2, order);
    let w65 = binomial_series(c, 1.2, order);
    let mut b = vec![a];
    for n in 0..order {
        let p2 = series_mul(&b, &b, n);
        let p3 = series_mul(&p2, &b, n);
        // D = (9x + 10c)C²p² + k²x + 100x(x + c)^{6/5}
        let mut dser = vec![0.0; n + 1];
        for m in 0..=n {
            dser[m] += 10.0 * c * cc * p2[m];
            if m >= 1 {
                dser[m] += 9.0 * cc * p2[m - 1] + 100.0 * w65[m - 1];
                if m == 1 {
                    dser[m] += k2;
                }
            }
        }
        // Ñ = 40(3x + 5c)(x + c)^{1/5} p − 2(C²p² − k²)p
        let lin = series_mul(&[200.0 * c, 120.0], &w15, n);
        let first = series_mul(&lin, &b, n);
        let nser: Vec<f64> = (0..=n)
            .map(|m| first[m] - 2.0 * cc * p3[m] + 2.0 * k2 * b.get(m).copied().unwrap_or(0.0))
            .collect();
        // 2 D p_x = Ñ at order xⁿ
        let known: f64 = (1..=n).map(|m| 2.0 * dser[m] * (n + 1 - m) as f64 * b[n + 1 - m]).sum();
        b.push((nser[n] - known) / (2.0 * (n + 1) as f64 * dser[0]));
    }
    Ok(b)
}

/// Evaluate a truncated even series at `r`.
pub fn series_eval(coeffs: &[f64], r: f64) -> f64 {
    poly_eval(coeffs, r * r)
}

/// Sampling box for [`exactness_check`].
#[derive(Debug, Clone)]
pub struct ExactnessConfig {
    pub unknown: String,
    pub env: ParamEnv,
    pub r_range: (f64, f64),
    pub a_range: (f64, f64),
    pub samples: usize,
    pub seed: u64,
}

/// Max over random `(r, a)` of `|d/dr I − μ·R| / scale`, where `μ` is fitted by
/// least squares from two values of `a′`. `I` is the first integral and `R`
/// the ODE residual; the scale is the term magnitude of `dI/dr`.
pub fn exactness_check(ode_residual: &Expr, first_integral: &Expr, cfg: &ExactnessConfig) -> Result<f64> {
    let di = first_integral.deriv();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let r = rng.random_range(cfg.r_range.0..cfg.r_range.1);
        let a = rng.random_range(cfg.a_range.0..cfg.a_range.1);
        let mut ds = [0.0; 2];
        let mut rs = [0.0; 2];
        let mut scale = 0.0f64;
        for s in 0..2 {
            let ap = rng.random_range(-2.0..2.0);
            let env = cfg
                .env
                .clone()
                .with(&formal_key(&cfg.unknown, 0), a)
                .with(&formal_key(&cfg.unknown, 1), ap);
            ds[s] = di.eval(r, &env)?;
            rs[s] = ode_residual.eval(r, &env)?;
            scale = scale.max(di.eval_magnitude(r, &env)?);
        }
        let rr = rs[0] * rs[0] + rs[1] * rs[1];
        let mu = if rr > 0.0 { (ds[0] * rs[0] + ds[1] * rs[1]) / rr } else { 0.0 };
        let dev = (ds[0] - mu * rs[0]).abs().max((ds[1] - mu * rs[1]).abs());
        worst = worst.max(dev / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}
