//! Desk-scale experiments: recurrence asymptotics, kernel universality at the
//! critical edge, and the bulk / soft-edge sanity limits.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equilibrium::{constants, CriticalConstants, EquilibriumData, SupportInterval};
use crate::error::{Error, Result};
use crate::lax::{LaxConfig, LaxSolver};
use crate::mp::{to_f64, MpCtx};
use crate::orthopoly::{cd_kernel, recurrence_table, PrecisionConfig, RecurrenceTable};
use crate::pi2::{eval_y, lax_points, solve_y, PI2Solution};
use crate::potentials::{DeformedFamily, FamilySpec};
use crate::report::Report;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub bulk_max: f64,
    pub edge_max: f64,
    pub kernel_slope: (f64, f64),
    pub recurrence_slope: (f64, f64),
    pub symmetry: f64,
    /// Relative band around 2 for the ratio of the b_n and a_n corrections.
    pub correction_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bulk_max: 0.02,
            edge_max: 0.05,
            kernel_slope: (-0.35, -0.03),
            recurrence_slope: (-0.65, -0.25),
            symmetry: 1e-10,
            correction_ratio: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Pi2Settings {
    pub l: f64,
    pub mesh: f64,
    pub tol: f64,
}

impl Default for Pi2Settings {
    fn default() -> Self {
        Pi2Settings {
            l: 40.0,
            mesh: 0.02,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub n_list: Vec<usize>,
    pub s0: f64,
    pub t0: f64,
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub bulk_grid: Vec<f64>,
    pub edge_grid: Vec<f64>,
    /// n at which the bulk and soft-edge tolerances apply.
    pub sanity_n: usize,
    pub tolerances: Tolerances,
    pub pi2: Pi2Settings,
    /// Overrides the per-n default working precision.
    pub digits: Option<usize>,
    pub validate: bool,
    pub support_guess: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: FamilySpec::example(),
            n_list: vec![32, 64, 128, 256],
            s0: 0.0,
            t0: 0.0,
            u_grid: vec![-4.0, -2.0, 0.0, 1.0],
            v_grid: vec![-4.0, -2.0, 0.0, 1.0],
            bulk_grid: vec![-1.5, -0.5, 0.0, 0.5, 1.5],
            edge_grid: vec![-2.0, -1.0, 0.0, 1.0],
            sanity_n: 128,
            tolerances: Tolerances::default(),
            pi2: Pi2Settings::default(),
            digits: None,
            validate: true,
            support_guess: (-1.5, 1.5),
        }
    }
}

impl ExperimentConfig {
    pub fn validate_fields(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_list must be nonempty and strictly ascending".into()));
        }
        if self.n_list[0] < 2 {
            return Err(Error::Config("n_list entries must be >= 2".into()));
        }
        if self.u_grid.is_empty() || self.v_grid.is_empty() {
            return Err(Error::Config("u_grid and v_grid must be nonempty".into()));
        }
        if let Some(d) = self.digits {
            if d < 30 {
                return Err(Error::Config(format!("digits must be >= 30, got {d}")));
            }
        }
        if !(self.s0.is_finite() && self.t0.is_finite()) {
            return Err(Error::Config("s0 and t0 must be finite".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<DeformedFamily> {
        DeformedFamily::from_spec(&self.family)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AiryValue {
    pub x: f64,
    pub ai: f64,
    pub ai_prime: f64,
}

const AI0: &str = "0.35502805388781723926006318600418317639797917419918";
const AIP0: &str = "0.25881940379280679840518356018920396347909113835493";
const AIRY_SERIES_LIMIT: f64 = 8.0;

/// Ai and Ai' for |x| <= 12.
pub fn airy(x: f64) -> Result<AiryValue> {
    if !(x.abs() <= 12.0) {
        return Err(Error::OutOfRange {
            what: "airy argument",
            value: x,
            lo: -12.0,
            hi: 12.0,
        });
    }
    if x.abs() <= AIRY_SERIES_LIMIT {
        Ok(airy_series(x))
    } else {
        Ok(airy_asymptotic(x))
    }
}

/// Maclaurin series, summed in 50-digit arithmetic to absorb the cancellation for x > 0.
pub fn airy_series(x: f64) -> AiryValue {
    let mut ctx = MpCtx::with_digits(50);
    let parse = |ctx: &mut MpCtx, s: &str| {
        let r = crate::poly::parse_rational(s).expect("constant parses");
        ctx.rational(&r)
    };
    let c1 = parse(&mut ctx, AI0);
    let c2 = parse(&mut ctx, AIP0);
    let xm = ctx.f(x);
    let x3 = ctx.mul(&ctx.mul(&xm, &xm), &xm);
    // f = sum c_k x^{3k}, g = sum d_k x^{3k+1}
    let (mut f, mut fp, mut g, mut gp) = (ctx.int(1), ctx.int(0), xm.clone(), ctx.int(1));
    let mut cf = ctx.int(1);
    let mut cg = ctx.int(1);
    let mut pow = ctx.int(1); // x^{3k}
    for k in 1..400usize {
        let k3 = 3 * k as i64;
        cf = ctx.div(&cf, &ctx.int((k3 - 1) * k3));
        cg = ctx.div(&cg, &ctx.int(k3 * (k3 + 1)));
        let prev = pow.clone();
        pow = ctx.mul(&pow, &x3);
        let tf = ctx.mul(&cf, &pow);
        f = ctx.add(&f, &tf);
        // d/dx x^{3k} = 3k x^{3k-1} = 3k x^2 x^{3k-3}
        let x2 = ctx.mul(&xm, &xm);
        fp = ctx.add(&fp, &ctx.mul(&ctx.mul(&cf, &ctx.int(k3)), &ctx.mul(&x2, &prev)));
        let tg = ctx.mul(&cg, &ctx.mul(&pow, &xm));
        g = ctx.add(&g, &tg);
        gp = ctx.add(&gp, &ctx.mul(&ctx.mul(&cg, &ctx.int(k3 + 1)), &pow));
        let size = to_f64(&tf).abs().max(to_f64(&tg).abs());
        if k > 5 && size < 1e-45 {
            break;
        }
    }
    let ai = ctx.sub(&ctx.mul(&c1, &f), &ctx.mul(&c2, &g));
    let aip = ctx.sub(&ctx.mul(&c1, &fp), &ctx.mul(&c2, &gp));
    AiryValue {
        x,
        ai: to_f64(&ai),
        ai_prime: to_f64(&aip),
    }
}

/// Large-|x| expansions, truncated at the smallest term.
pub fn airy_asymptotic(x: f64) -> AiryValue {
    let z = x.abs();
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..60 {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    // sums of c_k w^k, alternating, stopped before the terms start growing
    let sum = |c: &[f64], idx: &dyn Fn(usize) -> usize, sign: f64, pw: &dyn Fn(usize) -> i32| {
        let mut acc = 0.0;
        let mut last = f64::INFINITY;
        for k in 0.. {
            let i = idx(k);
            if i >= c.len() {
                break;
            }
            let term = sign.powi(k as i32) * c[i] * zeta.powi(-pw(k));
            if term.abs() > last {
                break;
            }
            acc += term;
            last = term.abs();
        }
        acc
    };
    if x > 0.0 {
        let e = (-zeta).exp() / (2.0 * PI.sqrt());
        let su = sum(&u, &|k| k, -1.0, &|k| k as i32);
        let sv = sum(&v, &|k| k, -1.0, &|k| k as i32);
        AiryValue {
            x,
            ai: e * su / z.powf(0.25),
            ai_prime: -e * z.powf(0.25) * sv,
        }
    } else {
        let ph = zeta - PI / 4.0;
        let ue = sum(&u, &|k| 2 * k, -1.0, &|k| 2 * k as i32);
        let uo = sum(&u, &|k| 2 * k + 1, -1.0, &|k| 2 * k as i32 + 1);
        let ve = sum(&v, &|k| 2 * k, -1.0, &|k| 2 * k as i32);
        let vo = sum(&v, &|k| 2 * k + 1, -1.0, &|k| 2 * k as i32 + 1);
        AiryValue {
            x,
            ai: (ph.cos() * ue + ph.sin() * uo) / (PI.sqrt() * z.powf(0.25)),
            ai_prime: z.powf(0.25) * (ph.sin() * ve - ph.cos() * vo) / PI.sqrt(),
        }
    }
}

pub fn airy_kernel(u: f64, v: f64) -> Result<f64> {
    let (a, b) = (airy(u)?, airy(v)?);
    if u == v {
        return Ok(a.ai_prime * a.ai_prime - u * a.ai * a.ai);
    }
    Ok((a.ai * b.ai_prime - b.ai * a.ai_prime) / (u - v))
}

pub fn sine_kernel(u: f64, v: f64) -> f64 {
    let d = PI * (u - v);
    if d == 0.0 {
        1.0
    } else {
        d.sin() / d
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceRow {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub a_pred: f64,
    pub b_pred: f64,
    pub a_err: f64,
    pub b_err: f64,
    /// Predictions with y evaluated at (c1 n^{6/7} s, c2 n^{4/7} t).
    pub a_pred_sharp: f64,
    pub b_pred_sharp: f64,
    /// Size of the n^{-2/7} correction term in the a_n prediction.
    pub a_correction: f64,
    pub b_correction: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelRow {
    pub label: String,
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub k_obs: f64,
    pub k_pred: f64,
    pub err: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub kind: String,
    pub config: ExperimentConfig,
    pub recurrence: Vec<RecurrenceRow>,
    pub kernel: Vec<KernelRow>,
    pub slopes: BTreeMap<String, f64>,
    pub checks: Report,
    pub module_hashes: BTreeMap<String, String>,
}

impl ComparisonReport {
    fn new(kind: &str, cfg: &ExperimentConfig) -> Self {
        ComparisonReport {
            kind: kind.to_string(),
            config: cfg.clone(),
            recurrence: Vec::new(),
            kernel: Vec::new(),
            slopes: BTreeMap::new(),
            checks: Report::default(),
            module_hashes: module_hashes(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.all_pass()
    }
}

/// Everything the experiments share for one (s0, t0): constants, y, tables per n.
pub struct Context {
    pub family: DeformedFamily,
    pub eq: EquilibriumData,
    pub constants: CriticalConstants,
    pub pi2: PI2Solution,
    pub tables: Vec<RecurrenceTable>,
}

impl Context {
    pub fn schedule(&self, n: usize, s0: f64, t0: f64) -> (f64, f64) {
        schedule(&self.constants, n, s0, t0)
    }

    pub fn table(&self, n: usize) -> Option<&RecurrenceTable> {
        self.tables.iter().find(|t| t.n == n)
    }
}

/// s = s0 / (c1 n^{6/7}), t = t0 / (c2 n^{4/7}).
pub fn schedule(k: &CriticalConstants, n: usize, s0: f64, t0: f64) -> (f64, f64) {
    let nf = n as f64;
    (s0 / (k.c1 * nf.powf(6.0 / 7.0)), t0 / (k.c2 * nf.powf(4.0 / 7.0)))
}

/// Solves the equilibrium problem and P_I^2, then builds every recurrence table in
/// `n_list` (concurrently across n).
pub fn build_context(cfg: &ExperimentConfig) -> Result<Context> {
    cfg.validate_fields()?;
    let family = cfg.family()?;
    let eq = EquilibriumData::compute(
        &family,
        SupportInterval::new(cfg.support_guess.0, cfg.support_guess.1)?,
    )?;
    let k = constants(&eq)?;
    let pi2 = solve_y(cfg.t0, cfg.pi2.l, lax_points(cfg.t0, cfg.pi2.l, cfg.pi2.mesh), cfg.pi2.tol)?;
    let tables = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let (s, t) = schedule(&k, n, cfg.s0, cfg.t0);
            let mut pc = PrecisionConfig::default_for(&family, n, s, t)?;
            if let Some(d) = cfg.digits {
                pc = pc.with_digits(d);
            }
            pc.validate = cfg.validate;
            recurrence_table(&family, n, s, t, &pc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Context {
        family,
        eq,
        constants: k,
        pi2,
        tables,
    })
}

/// Least-squares slope of log|err| against log n over the last three points.
pub fn loglog_slope(ns: &[usize], errs: &[f64]) -> f64 {
    let m = ns.len().min(3);
    let xs: Vec<f64> = ns[ns.len() - m..].iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs[errs.len() - m..].iter().map(|e| e.abs().ln()).collect();
    let xm = xs.iter().sum::<f64>() / m as f64;
    let ym = ys.iter().sum::<f64>() / m as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1].abs() < w[0].abs())
}

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

pub fn recurrence_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let ctx = build_context(cfg)?;
    recurrence_experiment_with(cfg, &ctx)
}

pub fn recurrence_experiment_with(cfg: &ExperimentConfig, ctx: &Context) -> Result<ComparisonReport> {
    let mut rep = ComparisonReport::new("recurrence", cfg);
    let SupportInterval { a, b } = ctx.eq.support;
    let c = ctx.constants.c;
    let y0 = eval_y(&ctx.pi2, cfg.s0)?.y;
    for &n in &cfg.n_list {
        let tab = ctx
            .table(n)
            .ok_or_else(|| Error::Config(format!("no table for n = {n}")))?;
        let (s, t) = ctx.schedule(n, cfg.s0, cfg.t0);
        let scale = (n as f64).powf(-2.0 / 7.0);
        let ys = eval_y(
            &ctx.pi2,
            ctx.constants.c1 * (n as f64).powf(6.0 / 7.0) * s,
        )?
        .y;
        let (a_n, b_n) = (tab.a_at(n), tab.b_at(n));
        let a_corr = y0 * scale / (2.0 * c);
        let b_corr = y0 * scale / c;
        let a_pred = (b - a) / 4.0 + a_corr;
        let b_pred = (b + a) / 2.0 + b_corr;
        rep.recurrence.push(RecurrenceRow {
            n,
            s,
            t,
            a_n,
            b_n,
            a_pred,
            b_pred,
            a_err: a_n - a_pred,
            b_err: b_n - b_pred,
            a_pred_sharp: (b - a) / 4.0 + ys * scale / (2.0 * c),
            b_pred_sharp: (b + a) / 2.0 + ys * scale / c,
            a_correction: a_corr,
            b_correction: b_corr,
            est_error: tab.validation_delta.unwrap_or(f64::NAN),
        });
    }
    let ns: Vec<usize> = rep.recurrence.iter().map(|r| r.n).collect();
    let tol = &cfg.tolerances;
    for (name, errs, corr) in [
        (
            "a",
            rep.recurrence.iter().map(|r| r.a_err).collect::<Vec<_>>(),
            rep.recurrence.iter().map(|r| r.a_correction).collect::<Vec<_>>(),
        ),
        (
            "b",
            rep.recurrence.iter().map(|r| r.b_err).collect(),
            rep.recurrence.iter().map(|r| r.b_correction).collect(),
        ),
    ] {
        let slope = loglog_slope(&ns, &errs);
        rep.slopes.insert(format!("{name}_residual"), slope);
        rep.checks.push(
            format!("{name}_residual_decreasing"),
            errs.last().copied().unwrap_or(f64::NAN),
            0.0,
            strictly_decreasing(&errs),
        );
        let worst = ns
            .iter()
            .zip(errs.iter().zip(&corr))
            .filter(|(&n, _)| n >= 64)
            .map(|(_, (e, c))| e.abs() / c.abs())
            .fold(0.0, f64::max);
        rep.checks.push(format!("{name}_residual_below_correction"), worst, 1.0, worst < 1.0);
        rep.checks.push(
            format!("{name}_residual_slope"),
            slope,
            tol.recurrence_slope.1,
            in_range(slope, tol.recurrence_slope),
        );
    }
    if let Some(last) = rep.recurrence.last() {
        let ratio = (last.b_n - (b + a) / 2.0) / (last.a_n - (b - a) / 4.0);
        rep.checks.push(
            "correction_ratio",
            ratio,
            2.0,
            (ratio - 2.0).abs() <= tol.correction_ratio * 2.0,
        );
    }
    Ok(rep)
}

pub fn kernel_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let ctx = build_context(cfg)?;
    kernel_experiment_with(cfg, &ctx)
}

/// Scaled kernel (1/(c n^{2/7})) K_n(b + u/(c n^{2/7}), b + v/(c n^{2/7})).
pub fn scaled_critical_kernel(tab: &RecurrenceTable, b: f64, c: f64, u: f64, v: f64) -> f64 {
    let sc = c * (tab.n as f64).powf(2.0 / 7.0);
    cd_kernel(tab, b + u / sc, b + v / sc) / sc
}

pub fn kernel_experiment_with(cfg: &ExperimentConfig, ctx: &Context) -> Result<ComparisonReport> {
    let mut rep = ComparisonReport::new("kernel", cfg);
    let b = ctx.eq.support.b;
    let c = ctx.constants.c;
    let lax = LaxSolver::new(cfg.s0, cfg.t0, &ctx.pi2, LaxConfig::default())?;
    let limit = lax.kernel_grid(&cfg.u_grid, &cfg.v_grid)?;
    let mut sym = 0.0f64;
    for &n in &cfg.n_list {
        let tab = ctx
            .table(n)
            .ok_or_else(|| Error::Config(format!("no table for n = {n}")))?;
        for (i, &u) in cfg.u_grid.iter().enumerate() {
            for (j, &v) in cfg.v_grid.iter().enumerate() {
                let obs = scaled_critical_kernel(tab, b, c, u, v);
                sym = sym.max((obs - scaled_critical_kernel(tab, b, c, v, u)).abs());
                let pred = &limit[i][j];
                rep.kernel.push(KernelRow {
                    label: "critical".into(),
                    n,
                    u,
                    v,
                    k_obs: obs,
                    k_pred: pred.k,
                    err: obs - pred.k,
                    est_error: pred.est_error,
                });
            }
        }
    }
    let tol = &cfg.tolerances;
    rep.checks.push_small("symmetry", sym, tol.symmetry);
    let mut every = true;
    for &u in &cfg.u_grid {
        for &v in &cfg.v_grid {
            let errs: Vec<f64> = rep
                .kernel
                .iter()
                .filter(|r| r.u == u && r.v == v)
                .map(|r| r.err)
                .collect();
            every &= strictly_decreasing(&errs);
        }
    }
    rep.checks.push("error_decreasing_every_probe", 0.0, 0.0, every);
    let ns = cfg.n_list.clone();
    let maxes: Vec<f64> = ns
        .iter()
        .map(|&n| {
            rep.kernel
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.err.abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let slope = loglog_slope(&ns, &maxes);
    rep.slopes.insert("max_error".into(), slope);
    rep.checks
        .push("max_error_slope", slope, tol.kernel_slope.1, in_range(slope, tol.kernel_slope));
    Ok(rep)
}

pub fn bulk_and_airy_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let mut c0 = cfg.clone();
    c0.s0 = 0.0;
    c0.t0 = 0.0;
    let ctx = build_context(&c0)?;
    bulk_and_airy_experiment_with(&c0, &ctx)
}

/// Soft-edge scaling constant (h0(a) sqrt(b - a) / 2)^{2/3} at the left endpoint.
pub fn soft_edge_scale(eq: &EquilibriumData) -> f64 {
    let SupportInterval { a, b } = eq.support;
    (eq.h0.eval(a) * (b - a).sqrt() / 2.0).powf(2.0 / 3.0)
}

pub fn bulk_and_airy_experiment_with(cfg: &ExperimentConfig, ctx: &Context) -> Result<ComparisonReport> {
    if cfg.s0 != 0.0 || cfg.t0 != 0.0 {
        return Err(Error::Config("the bulk and soft-edge checks run at s0 = t0 = 0".into()));
    }
    let mut rep = ComparisonReport::new("bulk_and_airy", cfg);
    let SupportInterval { a, b } = ctx.eq.support;
    let mid = 0.0f64.clamp(a, b);
    let rho = crate::equilibrium::density(&ctx.eq, 0.0, 0.0, mid)?;
    let gamma = soft_edge_scale(&ctx.eq);
    for &n in &cfg.n_list {
        let tab = ctx
            .table(n)
            .ok_or_else(|| Error::Config(format!("no table for n = {n}")))?;
        let nf = n as f64;
        for &u in &cfg.bulk_grid {
            for &v in &cfg.bulk_grid {
                let sc = nf * rho;
                let obs = cd_kernel(tab, mid + u / sc, mid + v / sc) / sc;
                let pred = sine_kernel(u, v);
                rep.kernel.push(KernelRow {
                    label: "bulk".into(),
                    n,
                    u,
                    v,
                    k_obs: obs,
                    k_pred: pred,
                    err: obs - pred,
                    est_error: 0.0,
                });
            }
        }
        for &u in &cfg.edge_grid {
            for &v in &cfg.edge_grid {
                let sc = gamma * nf.powf(2.0 / 3.0);
                let obs = cd_kernel(tab, a - u / sc, a - v / sc) / sc;
                let pred = airy_kernel(u, v)?;
                rep.kernel.push(KernelRow {
                    label: "edge".into(),
                    n,
                    u,
                    v,
                    k_obs: obs,
                    k_pred: pred,
                    err: obs - pred,
                    est_error: 1e-10,
                });
            }
        }
    }
    let max_err = |label: &str, n: usize| {
        rep.kernel
            .iter()
            .filter(|r| r.label == label && r.n == n)
            .map(|r| r.err.abs())
            .fold(0.0, f64::max)
    };
    let tol = &cfg.tolerances;
    for (label, bound) in [("bulk", tol.bulk_max), ("edge", tol.edge_max)] {
        let series: Vec<f64> = cfg.n_list.iter().map(|&n| max_err(label, n)).collect();
        if cfg.n_list.contains(&cfg.sanity_n) {
            rep.checks
                .push_small(format!("{label}_max_error_at_{}", cfg.sanity_n), max_err(label, cfg.sanity_n), bound);
        }
        rep.checks.push(
            format!("{label}_decreasing_under_doubling"),
            series.last().copied().unwrap_or(f64::NAN),
            0.0,
            strictly_decreasing(&series),
        );
        rep.slopes
            .insert(format!("{label}_max_error"), loglog_slope(&cfg.n_list, &series));
    }
    Ok(rep)
}

const MODULES: [(&str, &str); 12] = [
    ("equilibrium", include_str!("equilibrium.rs")),
    ("error", include_str!("error.rs")),
    ("harness", include_str!("harness.rs")),
    ("lax", include_str!("lax.rs")),
    ("linalg", include_str!("linalg.rs")),
    ("mp", include_str!("mp.rs")),
    ("orthopoly", include_str!("orthopoly.rs")),
    ("pi2", include_str!("pi2.rs")),
    ("poly", include_str!("poly.rs")),
    ("potentials", include_str!("potentials.rs")),
    ("quad", include_str!("quad.rs")),
    ("report", include_str!("report.rs")),
];

/// sha256 of every numerical module's source, so a report pins the code that made it.
pub fn module_hashes() -> BTreeMap<String, String> {
    MODULES
        .iter()
        .map(|(name, src)| {
            let digest = Sha256::digest(src.as_bytes());
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            (name.to_string(), hex)
        })
        .collect()
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn emit_report(report: &ComparisonReport, stem: &Path) -> Result<()> {
    if let Some(dir) = stem.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let csv_path = stem.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    if report.kind == "recurrence" {
        w.write_record(["n", "s", "t", "a_n", "b_n", "a_pred", "b_pred", "a_err", "b_err"])?;
        for r in &report.recurrence {
            w.write_record(
                [r.n as f64, r.s, r.t, r.a_n, r.b_n, r.a_pred, r.b_pred, r.a_err, r.b_err]
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if i == 0 { format!("{}", r.n) } else { format!("{x:e}") }),
            )?;
        }
    } else {
        w.write_record(["label", "n", "u", "v", "k_obs", "k_pred", "err"])?;
        for r in &report.kernel {
            w.write_record([
                r.label.clone(),
                r.n.to_string(),
                format!("{:e}", r.u),
                format!("{:e}", r.v),
                format!("{:e}", r.k_obs),
                format!("{:e}", r.k_pred),
                format!("{:e}", r.err),
            ])?;
        }
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(stem.with_extension("json"), json + "\n")?;
    Ok(())
}
