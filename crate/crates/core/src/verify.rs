//! The check battery behind `edgecrit verify`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::config::GlobalConfig;
use crate::equilibrium::{
    constants, interior_grid, measure_moments, variational_check, verify_assumptions, EquilibriumData,
    LogKernelMethod, SupportInterval,
};
use crate::error::Result;
use crate::harness::{
    airy, bulk_and_airy_experiment_with, build_context, kernel_experiment_with, recurrence_experiment_with,
};
use crate::lax::{zero_curvature_residual, LaxSolver};
use crate::orthopoly::{recurrence_table, PrecisionConfig};
use crate::pi2::{asymptotic_y, eval_y, lax_points, solve_y};
use crate::poly::Polynomial;
use crate::potentials::DeformedFamily;
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub seconds: f64,
    pub report: Report,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.report.all_pass()
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<Report>) -> SuiteOutcome {
    let start = Instant::now();
    let report = f().unwrap_or_else(|e| {
        let mut r = Report::default();
        r.push(format!("error: {e}"), f64::NAN, 0.0, false);
        r
    });
    SuiteOutcome {
        name: name.to_string(),
        seconds: start.elapsed().as_secs_f64(),
        report,
    }
}

pub fn run_suite(suite: Suite, cfg: &GlobalConfig) -> Vec<SuiteOutcome> {
    let mut out = vec![
        timed("equilibrium", || equilibrium_checks(cfg)),
        timed("airy", airy_checks),
        timed("orthopoly_small", orthopoly_small),
    ];
    if suite == Suite::All {
        out.push(timed("pi2", || pi2_checks(cfg)));
        out.push(timed("lax", || lax_checks(cfg)));
        out.push(timed("orthopoly", orthopoly_checks));
        out.extend(experiments(cfg));
    }
    out
}

fn equilibrium_checks(cfg: &GlobalConfig) -> Result<Report> {
    let f = DeformedFamily::from_spec(&cfg.family)?;
    let eq = EquilibriumData::compute(&f, SupportInterval::new(cfg.support_guess.0, cfg.support_guess.1)?)?;
    let mut r = verify_assumptions(&f, &eq);
    let k = constants(&eq)?;
    r.push("c > 0", k.c, 0.0, k.c > 0.0 && k.c.is_finite());
    r.push("c1, c2 finite", k.c1 + k.c2, 0.0, k.c1.is_finite() && k.c2.is_finite());
    for &(s, t) in &[(0.3, -0.2), (-0.45, 0.1), (0.05, 0.5)] {
        let (m, _) = measure_moments(&eq, s, t);
        r.push_small(format!("mass at ({s}, {t})"), m - 1.0, 1e-12);
    }
    let grid = interior_grid(&eq, 40);
    let v = variational_check(&f, &eq, 0.0, 0.0, &grid, &[eq.support.a - 1.0, eq.support.b + 1.0], LogKernelMethod::Chebyshev, 1.0)?;
    r.checks.extend(v.report.checks);
    Ok(r)
}

fn airy_checks() -> Result<Report> {
    let mut r = Report::default();
    let a0 = airy(0.0)?;
    r.push_small("Ai(0)", a0.ai - 0.355_028_053_887_817_2, 1e-14);
    let h = 1e-3;
    let mut ode = 0.0f64;
    for &x in &[-10.0, -5.0, -1.0, 0.5, 3.0, 9.0] {
        let d2 = (airy(x + h)?.ai - 2.0 * airy(x)?.ai + airy(x - h)?.ai) / (h * h);
        ode = ode.max((d2 - x * airy(x)?.ai).abs());
    }
    r.push_small("Airy ODE residual", ode, 1e-5);
    Ok(r)
}

fn orthopoly_small() -> Result<Report> {
    let f = DeformedFamily::unchecked(Polynomial::new(vec![0.0, 0.0, 0.125]), Polynomial::zero(), Polynomial::zero());
    let cfg = PrecisionConfig::default_for(&f, 8, 0.0, 0.0)?;
    let tab = recurrence_table(&f, 8, 0.0, 0.0, &cfg)?;
    let mut r = Report::default();
    let err = (1..=8)
        .map(|k| (tab.a_at(k) - (k as f64 / 2.0).sqrt()).abs())
        .fold(0.0, f64::max);
    r.push_small("Hermite a_k, k <= 8", err, 1e-10);
    Ok(r)
}

fn orthopoly_checks() -> Result<Report> {
    let mut r = Report::default();
    let f = DeformedFamily::unchecked(Polynomial::new(vec![0.0, 0.0, 1.0 / 40.0]), Polynomial::zero(), Polynomial::zero());
    let cfg = PrecisionConfig::default_for(&f, 40, 0.0, 0.0)?;
    let tab = recurrence_table(&f, 40, 0.0, 0.0, &cfg)?;
    let err = (1..=40)
        .map(|k| (tab.a_at(k) - (k as f64 / 2.0).sqrt()).abs())
        .fold(0.0, f64::max);
    r.push_small("Hermite a_k, k <= 40", err, 1e-10);
    let ex = crate::potentials::build_example_family();
    let cfg = PrecisionConfig::default_for(&ex, 64, 0.0, 0.0)?;
    let tab = recurrence_table(&ex, 64, 0.0, 0.0, &cfg)?;
    r.push_small("doubling delta at n = 64", tab.validation_delta.unwrap_or(f64::NAN), 1e-12);
    let wide = PrecisionConfig {
        truncation_margin: cfg.truncation_margin + 20.0,
        validate: false,
        ..cfg
    };
    let tw = recurrence_table(&ex, 64, 0.0, 0.0, &wide)?;
    let d = tab
        .a
        .iter()
        .zip(&tw.a)
        .chain(tab.b.iter().zip(&tw.b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    r.push_small("truncation widening at n = 64", d, 1e-12);
    r.push_small("|a_64 - 1| sanity", tab.a_at(64) - 1.0, 0.5);
    Ok(r)
}

fn pi2_checks(cfg: &GlobalConfig) -> Result<Report> {
    let p = &cfg.pi2;
    let n = (2.0 * p.l / p.mesh).round() as usize + 1;
    let sol = solve_y(p.t, p.l, n, p.tol)?;
    let mut r = Report::default();
    r.push_small("nodal residual", sol.residual_norm, 1e-8);
    let inner = p.l - 1.0;
    let mut interp = 0.0f64;
    let mut s = -inner;
    while s <= inner {
        interp = interp.max(eval_y(&sol, s)?.residual(s, p.t).abs());
        s += 0.0137;
    }
    r.push_small("interpolated residual", interp, 1e-8);
    let big = solve_y(p.t, 2.0 * p.l, 2 * n - 1, p.tol)?;
    r.push_small("L doubling at s = 0", eval_y(&sol, 0.0)?.y - eval_y(&big, 0.0)?.y, 5e-4);
    let (y_lo, y_hi) = (sol.y[0], *sol.y.last().unwrap_or(&f64::NAN));
    r.push_small("left boundary", y_lo - asymptotic_y(-p.l, p.t), 2.0 / p.l);
    r.push_small("right boundary", y_hi - asymptotic_y(p.l, p.t), 2.0 / p.l);
    Ok(r)
}

fn lax_checks(cfg: &GlobalConfig) -> Result<Report> {
    let p = &cfg.pi2;
    let lc = cfg.lax.to_lax();
    let mut r = Report::default();
    for &(s0, t0) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
        let sol = solve_y(t0, p.l, lax_points(t0, p.l, p.mesh), p.tol)?;
        let lax = LaxSolver::new(s0, t0, &sol, lc)?;
        let us: Vec<f64> = (0..=24).map(|k| -8.0 + 0.5 * k as f64).collect();
        let defect = lax
            .phi_many(&us)?
            .iter()
            .map(|p| p.reality_defect())
            .fold(0.0, f64::max);
        r.push_small(format!("reality defect ({s0}, {t0})"), defect, 1e-6);
        r.push_small(format!("Wronskian drift ({s0}, {t0})"), lax.wronskian_drift(48)?, 1e-9);
        let grid: Vec<f64> = (0..9).map(|k| -4.0 + k as f64).collect();
        let kg = lax.kernel_grid(&grid, &grid)?;
        let mut asym = 0.0f64;
        let mut imag = 0.0f64;
        let mut diag = f64::INFINITY;
        for i in 0..9 {
            diag = diag.min(kg[i][i].k);
            for j in 0..9 {
                asym = asym.max((kg[i][j].k - kg[j][i].k).abs());
                imag = imag.max(kg[i][j].imag.abs());
            }
        }
        r.push_small(format!("kernel symmetry ({s0}, {t0})"), asym, 1e-8);
        r.push_small(format!("kernel imaginary part ({s0}, {t0})"), imag, 1e-8);
        r.push(format!("kernel diagonal ({s0}, {t0})"), diag, -1e-8, diag >= -1e-8);
        let zc = [(-1.3, 0.4), (0.7, -2.0), (2.2, 1.1)]
            .iter()
            .map(|&(zr, s)| zero_curvature_residual(C::new(zr, 0.5), s0 + s, t0, &sol))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        r.push_small(format!("zero curvature ({s0}, {t0})"), zc, 1e-7);
        let d = ds_identity_defect(&sol, s0, t0, lc, &[(-2.0, 0.5), (-1.0, -1.0)])?;
        r.push_small(format!("dK/ds identity ({s0}, {t0})"), d, 1e-5);
    }
    Ok(r)
}

/// max |dK/ds - Phi1(u) Phi1(v) / (2 pi i)|, with dK/ds from a five-point stencil in s0.
pub fn ds_identity_defect(
    sol: &crate::pi2::PI2Solution,
    s0: f64,
    t0: f64,
    lc: crate::lax::LaxConfig,
    points: &[(f64, f64)],
) -> Result<f64> {
    let d = 1e-2;
    let at = |k: f64| LaxSolver::new(s0 + k * d, t0, sol, lc);
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    let here = at(0.0)?;
    let mut worst = 0.0f64;
    for &(u, v) in points {
        let k = |l: &LaxSolver| l.kernel(u, v).map(|x| x.k);
        let fd = (k(&m2)? - 8.0 * k(&m1)? + 8.0 * k(&p1)? - k(&p2)?) / (12.0 * d);
        let (pu, pv) = (here.phi(u)?, here.phi(v)?);
        let id = (pu.phi1 * pv.phi1 / C::new(0.0, 2.0 * PI)).re;
        worst = worst.max((fd - id).abs());
    }
    Ok(worst)
}

fn experiments(cfg: &GlobalConfig) -> Vec<SuiteOutcome> {
    let mut out = Vec::new();
    for &(s0, t0) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
        let mut e = cfg.experiment();
        e.s0 = s0;
        e.t0 = t0;
        let start = Instant::now();
        let ctx = match build_context(&e) {
            Ok(c) => c,
            Err(err) => {
                out.push(timed(&format!("theorem2 ({s0}, {t0})"), || Err(err)));
                continue;
            }
        };
        let setup = start.elapsed().as_secs_f64();
        let mut o = timed(&format!("theorem2 ({s0}, {t0})"), || Ok(recurrence_experiment_with(&e, &ctx)?.checks));
        o.seconds += setup;
        out.push(o);
        if s0 == 0.0 && t0 == 0.0 {
            let mut k = e.clone();
            k.n_list.retain(|&n| n >= 64);
            out.push(timed("theorem1", || Ok(kernel_experiment_with(&k, &ctx)?.checks)));
            out.push(timed("sanity limits", || Ok(bulk_and_airy_experiment_with(&k, &ctx)?.checks)));
        }
    }
    out
}
