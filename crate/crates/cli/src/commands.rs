//! The four subcommands.

use std::collections::BTreeMap;

use coframe_core::catalog::{flag_region, flag_tan, instantiate, list_families, ode_start, verify, Payload};
use coframe_core::geometries::log_grid;
use coframe_core::scalar::lambert_w0;
use coframe_core::solvers::{integrate_ode_at, poly_real_roots, series_coeffs, series_eval, track_branches, tracking_grid, RealRoot};
use coframe_core::{Error, Geometry, ParamEnv};
use serde::Serialize;

use crate::args::{BranchArgs, Command, Format, GridArgs, OdeArgs, PhaseArgs, VerifyArgs};
use crate::output::{csv_text, emit, g17, json_text};
use crate::{CliError, Outcome};

const SCHEMA: u32 = 1;

/// Largest Lambert-overlay deviation accepted by `ode`.
const OVERLAY_TOL: f64 = 1e-6;

pub fn run(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Verify(a) => cmd_verify(&a),
        Command::Branches(a) => cmd_branches(&a),
        Command::PhaseGrid(a) => cmd_phase_grid(&a),
        Command::Ode(a) => cmd_ode(&a),
    }
}

fn params_map(env: &ParamEnv) -> BTreeMap<String, f64> {
    env.iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn spaced(lo: f64, hi: f64, grid: &GridArgs) -> Vec<f64> {
    if grid.linear {
        let n = grid.grid - 1;
        (0..=n).map(|j| if j == n { hi } else { lo + (hi - lo) * j as f64 / n as f64 }).collect()
    } else {
        log_grid(lo, hi, grid.grid)
    }
}

fn check_grid(grid: &GridArgs) -> Result<(), CliError> {
    if grid.grid < 2 {
        return Err(CliError::Config(format!("grid count must be at least 2, got {}", grid.grid)));
    }
    if !(grid.rmax.is_finite() && grid.rmax > 0.0) {
        return Err(CliError::Config(format!("rmax must be positive, got {}", grid.rmax)));
    }
    Ok(())
}

/// Sample radii on the geometry's radial domain.
fn radii(g: &Geometry, grid: &GridArgs) -> Result<Vec<f64>, CliError> {
    check_grid(grid)?;
    if g.coframe.radial().is_none() {
        return Ok(vec![1.0]);
    }
    let r0 = g.domain_min_value();
    let lo = grid.rmin.unwrap_or(if r0 > 0.0 { r0 * (1.0 + 1e-3) } else { 1e-2 });
    if !(lo >= r0 && lo > 0.0) {
        return Err(CliError::Config(format!("rmin = {lo} lies below the domain minimum {r0}")));
    }
    if grid.rmax <= lo {
        return Err(CliError::Config(format!("rmax = {} must exceed rmin = {lo}", grid.rmax)));
    }
    Ok(spaced(lo, grid.rmax, grid))
}

#[derive(Serialize)]
struct Entry {
    family: String,
    params: BTreeMap<String, f64>,
    equation: String,
    max_relative_residual: f64,
    pass: bool,
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    schema: u32,
    command: &'static str,
    params: BTreeMap<String, serde_json::Value>,
    entries: Vec<Entry>,
    skipped: Vec<Skipped>,
    pass: bool,
}

#[derive(Serialize)]
struct Skipped {
    family: String,
    reason: String,
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Config(format!("tolerance must be positive, got {}", a.tol)));
    }
    check_grid(&a.grid)?;
    let explicit = a.params.env();
    let ids: Vec<String> = match &a.family {
        Some(id) => vec![id.clone()],
        None => list_families().into_iter().map(String::from).collect(),
    };
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for id in &ids {
        let fam = match instantiate(id, &explicit) {
            Ok(f) => f,
            Err(Error::BadParams(reason)) if a.all => {
                skipped.push(Skipped { family: id.clone(), reason });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let rs = radii(&fam.geometry, &a.grid)?;
        let params = params_map(&fam.env);
        match verify(&fam, &rs, a.tol) {
            Ok(reports) => entries.extend(reports.into_iter().map(|rep| Entry {
                family: rep.family.clone(),
                params: params.clone(),
                max_relative_residual: rep.max(),
                pass: rep.pass,
                samples: rep.values.len(),
                equation: rep.equation,
                error: None,
            })),
            Err(e) if a.all => entries.push(Entry {
                family: id.clone(),
                params,
                equation: fam.equation.label(),
                max_relative_residual: f64::INFINITY,
                pass: false,
                samples: 0,
                error: Some(e.to_string()),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut params: BTreeMap<String, serde_json::Value> =
                params_map(&explicit).into_iter().map(|(k, v)| (k, v.into())).collect();
            params.insert("tol".into(), a.tol.into());
            params.insert("grid".into(), a.grid.grid.into());
            params.insert("rmax".into(), a.grid.rmax.into());
            if let Some(r) = a.grid.rmin {
                params.insert("rmin".into(), r.into());
            }
            params.insert("spacing".into(), if a.grid.linear { "linear" } else { "log" }.into());
            json_text(&VerifyReport { schema: SCHEMA, command: "verify", params, entries, skipped, pass })?
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|e| {
                    vec![e.family.clone(), e.equation.clone(), g17(e.max_relative_residual), e.pass.to_string(), e.samples.to_string()]
                })
                .collect();
            csv_text(&["family", "equation", "max_relative_residual", "pass", "samples"], &rows)?
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct BranchSummary {
    branch: usize,
    global: bool,
    boundary_match: bool,
    r_start: f64,
    r_end: f64,
    value_start: f64,
    value_end: f64,
}

#[derive(Serialize)]
struct BranchReport {
    schema: u32,
    command: &'static str,
    family: String,
    params: BTreeMap<String, f64>,
    branch_count: usize,
    branch_count_global: usize,
    /// Real roots at the boundary radius; multiplicity above one marks a degeneracy.
    boundary_roots: Vec<RealRoot>,
    branches: Vec<BranchSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<(f64, usize, f64, bool)>>,
}

fn cmd_branches(a: &BranchArgs) -> Result<Outcome, CliError> {
    let fam = instantiate(&a.family, &a.params.env())?;
    let Payload::Implicit(spec) = &fam.payload else {
        return Err(CliError::Config(format!("family `{}` is not an implicit family", a.family)));
    };
    let rs = radii(&fam.geometry, &a.grid)?;
    let r0 = spec.boundary.as_ref().map(|b| b.r0).unwrap_or(0.0);
    let grid = if a.grid.rmin.is_some() { rs } else { tracking_grid(r0, &rs) };
    let branches = track_branches(spec, &grid, false)?;
    let boundary_roots = match &spec.boundary {
        Some(b) => poly_real_roots(&spec.coeffs_at(b.r0)?)?,
        None => vec![],
    };
    let mut rows = Vec::new();
    for b in &branches {
        for (r, v) in b.radii.iter().zip(&b.values) {
            rows.push((*r, b.branch, *v, b.global));
        }
    }
    let summary: Vec<BranchSummary> = branches
        .iter()
        .map(|b| BranchSummary {
            branch: b.branch,
            global: b.global,
            boundary_match: b.boundary_match,
            r_start: b.radii[0],
            r_end: *b.radii.last().expect("nonempty branch"),
            value_start: b.values[0],
            value_end: *b.values.last().expect("nonempty branch"),
        })
        .collect();
    let mut report = BranchReport {
        schema: SCHEMA,
        command: "branches",
        family: fam.id.clone(),
        params: params_map(&fam.env),
        branch_count: branches.len(),
        branch_count_global: branches.iter().filter(|b| b.global).count(),
        boundary_roots,
        branches: summary,
        rows: None,
    };
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let text_rows: Vec<Vec<String>> =
                rows.iter().map(|(r, b, v, gl)| vec![g17(*r), b.to_string(), g17(*v), gl.to_string()]).collect();
            emit(a.output.out.as_deref(), &csv_text(&["r", "branch_id", "value", "global"], &text_rows)?)?;
            eprint!("{}", json_text(&report)?);
        }
        Format::Json => {
            report.rows = Some(rows);
            emit(a.output.out.as_deref(), &json_text(&report)?)?;
        }
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct PhaseRow {
    a1: i64,
    a3: i64,
    tan_theta: Option<f64>,
    theta: f64,
    region: &'static str,
}

fn cmd_phase_grid(a: &PhaseArgs) -> Result<Outcome, CliError> {
    if a.min > a.max {
        return Err(CliError::Config(format!("min = {} exceeds max = {}", a.min, a.max)));
    }
    let mut rows = Vec::new();
    for a1 in a.min..=a.max {
        for a3 in a.min..=a.max {
            rows.push(PhaseRow {
                a1,
                a3,
                // adding zero maps -0 to 0
                tan_theta: flag_tan(a1, a3).map(|t| t + 0.0),
                theta: coframe_core::catalog::phase_of_flag(a1, a3),
                region: flag_region(a1, a3).as_str(),
            });
        }
    }
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let text_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|p| {
                    let t = p.tan_theta.map(g17).unwrap_or_else(|| "inf".into());
                    vec![p.a1.to_string(), p.a3.to_string(), t, p.region.to_string()]
                })
                .collect();
            csv_text(&["a1", "a3", "tan_theta", "region"], &text_rows)?
        }
        Format::Json => json_text(&rows)?,
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

/// `p = 10 r^{6/5} / (3 |C| √W(C0 r^{128/45}))`, the cone solution.
fn lambert_reference(r: f64, c0: f64, cnorm: f64) -> Result<f64, CliError> {
    Ok(10.0 * r.powf(1.2) / (3.0 * cnorm * lambert_w0(c0 * r.powf(128.0 / 45.0))?.sqrt()))
}

#[derive(Serialize)]
struct OdeRow {
    r: f64,
    p: f64,
    dp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambert: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambert_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series_deviation: Option<f64>,
}

fn cmd_ode(a: &OdeArgs) -> Result<Outcome, CliError> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Config(format!("tolerance must be positive, got {}", a.tol)));
    }
    check_grid(&a.grid)?;
    let fam = instantiate(&a.family, &a.params.env())?;
    let Payload::Ode(spec) = &fam.payload else {
        return Err(CliError::Config(format!("family `{}` is not an ODE family", a.family)));
    };
    let env = fam.full_env();
    let cone = spec.c == 0.0;
    let lo = a.grid.rmin.unwrap_or(if cone { 1.0 } else { 1e-3 });
    if !(lo > 0.0 && a.grid.rmax > lo) {
        return Err(CliError::Config(format!("need 0 < rmin < rmax, got rmin = {lo}, rmax = {}", a.grid.rmax)));
    }
    let rs = spaced(lo, a.grid.rmax, &a.grid);
    let cnorm = spec.csq().sqrt();
    let lambert = cone && spec.k == 0.0 && cnorm > 0.0;
    let c0 = env.get_or("C0", 1.0);
    let series = if cone { None } else { series_coeffs(spec, env.get_or("a", 0.0), 6).ok() };
    let p0 = if lambert { lambert_reference(lo, c0, cnorm)? } else { ode_start(spec, &env, lo)? };
    let trace = integrate_ode_at(spec, lo, p0, &rs[1..], a.tol)?;
    let mut points = vec![(lo, p0, spec.rhs(lo, p0)?)];
    points.extend(trace.radii.iter().zip(&trace.values).zip(&trace.derivatives).map(|((r, p), dp)| (*r, *p, *dp)));
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &(r, p, dp) in &points {
        let l = if lambert { Some(lambert_reference(r, c0, cnorm)?) } else { None };
        let s = series.as_ref().map(|b| series_eval(b, r));
        if let Some(l) = l {
            worst = worst.max((p - l).abs());
        }
        rows.push(OdeRow {
            r,
            p,
            dp,
            lambert: l,
            lambert_deviation: l.map(|l| (p - l).abs()),
            series: s,
            series_deviation: s.map(|s| (p - s).abs()),
        });
    }
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut header = vec!["r", "p", "dp"];
            if lambert {
                header.extend(["lambert", "lambert_deviation"]);
            }
            if series.is_some() {
                header.extend(["series", "series_deviation"]);
            }
            let text_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    let mut v = vec![g17(row.r), g17(row.p), g17(row.dp)];
                    for x in [row.lambert, row.lambert_deviation, row.series, row.series_deviation].into_iter().flatten() {
                        v.push(g17(x));
                    }
                    v
                })
                .collect();
            csv_text(&header, &text_rows)?
        }
        Format::Json => json_text(&rows)?,
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(if worst <= OVERLAY_TOL { Outcome::Pass } else { Outcome::Fail })
}
