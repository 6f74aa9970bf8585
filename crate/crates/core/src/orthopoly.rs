//! Orthonormal polynomials for the varying weight e^{-n V_{s,t}}: recurrence
//! coefficients by a discretized Stieltjes procedure in multiprecision, and the
//! Christoffel-Darboux kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::{to_f64, Mp, MpCtx};
use crate::poly::Polynomial;
use crate::potentials::DeformedFamily;
use crate::quad::composite_gauss_legendre;

const PANEL: usize = 20;
/// Bound on n(V - min V) for the coarse grid searched before truncation.
const WIDE_EXPONENT: f64 = 1400.0;
const VALIDATION_TOL: f64 = 1e-12;
const DEFAULT_MARGIN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionConfig {
    pub digits: usize,
    /// Decimal exponent of the cut: nodes whose largest q_k^2 density is below
    /// 10^-margin of the peak are dropped.
    pub truncation_margin: f64,
    pub quad_nodes: usize,
    #[serde(default = "yes")]
    pub validate: bool,
}

fn yes() -> bool {
    true
}

impl PrecisionConfig {
    /// digits = max(60, ceil(0.45 n range_V / ln 10)) over the truncated window,
    /// margin 40, quad_nodes = 20 max(40, n).
    pub fn default_for(f: &DeformedFamily, n: usize, s: f64, t: f64) -> Result<Self> {
        let v = f.combined(s, t);
        let quad_nodes = PANEL * n.max(40);
        let w = window(&v, n, DEFAULT_MARGIN, quad_nodes)?;
        let digits = ((0.45 * n as f64 * w.range_v / std::f64::consts::LN_10).ceil() as usize).max(60);
        Ok(PrecisionConfig {
            digits,
            truncation_margin: DEFAULT_MARGIN,
            quad_nodes,
            validate: true,
        })
    }

    pub fn with_digits(self, digits: usize) -> Self {
        PrecisionConfig { digits, ..self }
    }

    pub fn doubled(&self) -> Self {
        PrecisionConfig {
            digits: 2 * self.digits,
            quad_nodes: 2 * self.quad_nodes,
            validate: false,
            ..*self
        }
    }

    fn check(&self) -> Result<()> {
        if self.digits < 30 {
            return Err(Error::Config(format!("digits must be >= 30, got {}", self.digits)));
        }
        if !(20.0..=280.0).contains(&self.truncation_margin) {
            return Err(Error::Config(format!(
                "truncation_margin must lie in [20, 280], got {}",
                self.truncation_margin
            )));
        }
        if self.quad_nodes < 2 * PANEL {
            return Err(Error::Config(format!("quad_nodes must be >= {}", 2 * PANEL)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub n: usize,
    pub s: f64,
    pub t: f64,
    /// a_1..a_n
    pub a: Vec<f64>,
    /// b_0..b_n
    pub b: Vec<f64>,
    /// ln kappa_0..ln kappa_n; the leading coefficients themselves overflow quickly.
    pub log_norms: Vec<f64>,
    pub window: (f64, f64),
    pub cfg: PrecisionConfig,
    /// Largest |change| seen in the doubling run, if one was made.
    pub validation_delta: Option<f64>,
    #[serde(skip, default = "Polynomial::zero")]
    potential: Polynomial,
}

impl RecurrenceTable {
    /// a_k for 1 <= k <= n.
    pub fn a_at(&self, k: usize) -> f64 {
        self.a[k - 1]
    }

    pub fn b_at(&self, k: usize) -> f64 {
        self.b[k]
    }

    pub fn kappa(&self, k: usize) -> f64 {
        self.log_norms[k].exp()
    }

    pub fn potential(&self) -> &Polynomial {
        &self.potential
    }
}

#[derive(Debug, Clone, Copy)]
struct Window {
    lo: f64,
    hi: f64,
    range_v: f64,
}

fn global_min(v: &Polynomial) -> (f64, f64) {
    let c = v.coeffs();
    let lead = v.leading();
    let bound = 1.0 + c[..c.len() - 1].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let dv = v.derivative();
    let ddv = dv.derivative();
    let m = 20_000;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=m {
        let x = -bound + 2.0 * bound * i as f64 / m as f64;
        let y = v.eval(x);
        if y < best.1 {
            best = (x, y);
        }
    }
    let mut x = best.0;
    for _ in 0..20 {
        let d = ddv.eval(x);
        if d <= 0.0 {
            break;
        }
        let step = dv.eval(x) / d;
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if v.eval(x) < best.1 {
        (x, v.eval(x))
    } else {
        best
    }
}

/// Interval where n (V - min V) <= `exponent`, padded by one sample.
fn level_window(v: &Polynomial, n: usize, exponent: f64) -> (f64, f64, f64) {
    let (xm, vm) = global_min(v);
    let above = |x: f64| n as f64 * (v.eval(x) - vm) > exponent;
    let mut r = 1.0;
    while !(above(xm + r) && above(xm - r)) {
        r *= 2.0;
    }
    let m = 40_000;
    let (mut lo, mut hi) = (xm, xm);
    for i in 0..=m {
        let x = xm - r + 2.0 * r * i as f64 / m as f64;
        if !above(x) {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    let pad = 2.0 * r / m as f64;
    (lo - pad, hi + pad, vm)
}

/// Locates the truncation window with a double-precision Lanczos pass on a
/// uniform grid: keeps every node where some q_k^2 density, k <= n, exceeds
/// 10^-margin of its peak.
fn window(v: &Polynomial, n: usize, margin: f64, samples: usize) -> Result<Window> {
    let (wlo, whi, vm) = level_window(v, n, WIDE_EXPONENT);
    let m = samples.max(2000);
    let h = (whi - wlo) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| wlo + h * i as f64).collect();
    let mut q: Vec<f64> = xs
        .iter()
        .map(|&x| (-(n as f64) * (v.eval(x) - vm) / 2.0).exp() * h.sqrt())
        .collect();
    let nrm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= nrm);
    let mut dens: Vec<f64> = q.iter().map(|x| x * x).collect();
    let mut prev = vec![0.0; m];
    let mut a_prev = 0.0;
    for _ in 0..n {
        let b: f64 = xs.iter().zip(&q).map(|(x, q)| x * q * q).sum();
        let mut r: Vec<f64> = (0..m).map(|i| (xs[i] - b) * q[i] - a_prev * prev[i]).collect();
        // one pass of reorthogonalization keeps the double pass honest for n ~ 256
        for basis in [&q, &prev] {
            let d: f64 = r.iter().zip(basis.iter()).map(|(r, q)| r * q).sum();
            r.iter_mut().zip(basis.iter()).for_each(|(r, q)| *r -= d * q);
        }
        let a = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(a > 0.0) {
            return Err(Error::NonPositiveNorm(0));
        }
        r.iter_mut().for_each(|x| *x /= a);
        prev = std::mem::replace(&mut q, r);
        a_prev = a;
        for (d, x) in dens.iter_mut().zip(&q) {
            *d = d.max(x * x);
        }
    }
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    let cut = peak * 10f64.powf(-margin);
    let first = dens.iter().position(|&d| d > cut).unwrap_or(0);
    let last = dens.iter().rposition(|&d| d > cut).unwrap_or(m - 1);
    if first == 0 || last == m - 1 {
        return Err(Error::QuadratureFailure(format!(
            "weight window [{wlo}, {whi}] too narrow for n = {n}"
        )));
    }
    let lo = xs[first - 1];
    let hi = xs[last + 1];
    let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &xs[first - 1..=last + 1] {
        let y = v.eval(x);
        vlo = vlo.min(y);
        vhi = vhi.max(y);
    }
    Ok(Window {
        lo,
        hi,
        range_v: vhi - vlo,
    })
}

struct Raw {
    a: Vec<f64>,
    b: Vec<f64>,
    log_norms: Vec<f64>,
    window: (f64, f64),
}

fn mp_poly(ctx: &mut MpCtx, v: &Polynomial) -> Vec<Mp> {
    match v.exact() {
        Some(rs) => rs.iter().map(|r| ctx.rational(r)).collect(),
        None => v.coeffs().iter().map(|&c| ctx.f(c)).collect(),
    }
}

fn stieltjes(v: &Polynomial, n: usize, cfg: &PrecisionConfig) -> Result<Raw> {
    let w = window(v, n, cfg.truncation_margin, cfg.quad_nodes)?;
    let panels = cfg.quad_nodes.div_ceil(PANEL);
    let (xs, ws) = composite_gauss_legendre(w.lo, w.hi, panels, PANEL);
    let mut ctx = MpCtx::with_digits(cfg.digits);
    let coeffs = mp_poly(&mut ctx, v);
    let (_, vm) = global_min(v);
    let half_n = ctx.f(-(n as f64) / 2.0);
    let vm_mp = ctx.f(vm);

    let x: Vec<Mp> = xs.iter().map(|&x| ctx.f(x)).collect();
    let mut q: Vec<Mp> = Vec::with_capacity(x.len());
    for (xi, &wi) in x.iter().zip(&ws) {
        let mut acc = coeffs.last().cloned().unwrap_or_else(|| ctx.int(0));
        for c in coeffs.iter().rev().skip(1) {
            acc = ctx.fma(&acc, xi, c);
        }
        let arg = ctx.mul(&half_n, &ctx.sub(&acc, &vm_mp));
        let e = ctx.exp(&arg);
        q.push(ctx.mul(&e, &ctx.sqrt(&ctx.f(wi))));
    }
    let norm_sq = q.iter().fold(ctx.int(0), |s, qi| ctx.fma(qi, qi, &s));
    let norm = ctx.sqrt(&norm_sq);
    q.iter_mut().for_each(|qi| *qi = ctx.div(qi, &norm));
    // kappa_0^2 = 1 / int e^{-nV} = e^{n vm} / norm^2
    let mut log_norms = vec![n as f64 * vm / 2.0 - to_f64(&norm).ln()];

    let zero = ctx.int(0);
    let mut prev: Vec<Mp> = vec![zero.clone(); x.len()];
    let mut a_prev = zero.clone();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let bk = x
            .iter()
            .zip(&q)
            .fold(zero.clone(), |s, (xi, qi)| ctx.fma(&ctx.mul(xi, qi), qi, &s));
        b.push(to_f64(&bk));
        if k == n {
            break;
        }
        let mut r: Vec<Mp> = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let ri = ctx.mul(&ctx.sub(&x[i], &bk), &q[i]);
            r.push(ctx.sub(&ri, &ctx.mul(&a_prev, &prev[i])));
        }
        let ak_sq = r.iter().fold(zero.clone(), |s, ri| ctx.fma(ri, ri, &s));
        let ak = ctx.sqrt(&ak_sq);
        let akf = to_f64(&ak);
        if !(akf > 0.0) || !akf.is_finite() {
            return Err(Error::NonPositiveNorm(k + 1));
        }
        r.iter_mut().for_each(|ri| *ri = ctx.div(ri, &ak));
        prev = std::mem::replace(&mut q, r);
        a_prev = ak;
        a.push(akf);
        log_norms.push(log_norms[k] - akf.ln());
    }
    Ok(Raw {
        a,
        b,
        log_norms,
        window: (w.lo, w.hi),
    })
}

/// Recurrence coefficients of the orthonormal polynomials for e^{-n V_{s,t}}:
/// x p_k = a_{k+1} p_{k+1} + b_k p_k + a_k p_{k-1}.
pub fn recurrence_table(
    f: &DeformedFamily,
    n: usize,
    s: f64,
    t: f64,
    cfg: &PrecisionConfig,
) -> Result<RecurrenceTable> {
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as f64,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    cfg.check()?;
    let v = f.combined(s, t);
    if v.degree().map_or(true, |d| d % 2 == 1 || d < 2) || v.leading() <= 0.0 {
        return Err(Error::InvalidFamily(format!(
            "V_{{s,t}} at s = {s}, t = {t} is not confining"
        )));
    }
    let (raw, validation_delta) = if cfg.validate {
        let hi = cfg.doubled();
        let (r0, r1) = rayon::join(|| stieltjes(&v, n, cfg), || stieltjes(&v, n, &hi));
        let (r0, r1) = (r0?, r1?);
        let delta = r0
            .a
            .iter()
            .zip(&r1.a)
            .chain(r0.b.iter().zip(&r1.b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if !(delta < VALIDATION_TOL) {
            return Err(Error::PrecisionExhausted(delta));
        }
        (r0, Some(delta))
    } else {
        (stieltjes(&v, n, cfg)?, None)
    };
    Ok(RecurrenceTable {
        n,
        s,
        t,
        a: raw.a,
        b: raw.b,
        log_norms: raw.log_norms,
        window: raw.window,
        cfg: *cfg,
        validation_delta,
        potential: v,
    })
}

/// The f64 nodes and weights the Stieltjes pass integrates against, with the weight
/// e^{-n(V - min V)} folded in. Exposed for independent checks.
pub fn discretization(
    f: &DeformedFamily,
    n: usize,
    s: f64,
    t: f64,
    cfg: &PrecisionConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = f.combined(s, t);
    let w = window(&v, n, cfg.truncation_margin, cfg.quad_nodes)?;
    let (_, vm) = global_min(&v);
    let (xs, ws) = composite_gauss_legendre(w.lo, w.hi, cfg.quad_nodes.div_ceil(PANEL), PANEL);
    let ws = xs
        .iter()
        .zip(ws)
        .map(|(&x, w)| w * (-(n as f64) * (v.eval(x) - vm)).exp())
        .collect();
    Ok((xs, ws))
}

/// p_k(x) by forward recurrence from p_0 = kappa_0.
pub fn orthonormal_eval(tab: &RecurrenceTable, k: usize, x: f64) -> f64 {
    chain(tab, k, x, tab.log_norms[0].exp()).0[k]
}

/// phi_j(x) = p_j(x) e^{-nV(x)/2} and the matching p_j' e^{-nV(x)/2}, j = 0..=k.
fn chain(tab: &RecurrenceTable, k: usize, x: f64, start: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::with_capacity(k + 1);
    let mut d = Vec::with_capacity(k + 1);
    p.push(start);
    d.push(0.0);
    for j in 0..k {
        let aj = if j == 0 { 0.0 } else { tab.a[j - 1] };
        let (pm, dm) = if j == 0 { (0.0, 0.0) } else { (p[j - 1], d[j - 1]) };
        let pn = ((x - tab.b[j]) * p[j] - aj * pm) / tab.a[j];
        let dn = ((x - tab.b[j]) * d[j] + p[j] - aj * dm) / tab.a[j];
        p.push(pn);
        d.push(dn);
    }
    (p, d)
}

fn weighted_start(tab: &RecurrenceTable, x: f64) -> f64 {
    (tab.log_norms[0] - tab.n as f64 * tab.potential.eval(x) / 2.0).exp()
}

/// phi_0(x)..phi_n(x) with phi_k = p_k e^{-nV/2}.
pub fn weighted_eval(tab: &RecurrenceTable, x: f64) -> Vec<f64> {
    chain(tab, tab.n, x, weighted_start(tab, x)).0
}

/// K_n(x, y) including the weight factors e^{-nV/2} at both points.
pub fn cd_kernel(tab: &RecurrenceTable, x: f64, y: f64) -> f64 {
    let n = tab.n;
    let an = tab.a[n - 1];
    if x == y {
        let (p, d) = chain(tab, n, x, weighted_start(tab, x));
        return an * (d[n] * p[n - 1] - d[n - 1] * p[n]);
    }
    let px = weighted_eval(tab, x);
    let py = weighted_eval(tab, y);
    let scale = 1.0 + x.abs().max(y.abs());
    if (x - y).abs() < 1e-6 * scale {
        // the quotient cancels badly here; the defining sum does not
        return (0..n).map(|k| px[k] * py[k]).sum();
    }
    let k = an * (px[n] * py[n - 1] - py[n] * px[n - 1]) / (x - y);
    if x < y {
        k
    } else {
        // evaluate in a fixed order so K(x,y) and K(y,x) agree bit for bit
        an * (py[n] * px[n - 1] - px[n] * py[n - 1]) / (y - x)
    }
}
