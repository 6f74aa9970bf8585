//! One-cut equilibrium measure, the deformation densities, and the critical constants.
//!
//! All polynomial data (h0, h1, h2) come from Laurent expansions at infinity, so
//! nothing here depends on quadrature except the log-potential check.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::{to_f64, Mp, MpCtx};
use crate::poly::Polynomial;
use crate::potentials::DeformedFamily;
use crate::quad::{gauss_chebyshev, gauss_legendre};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub a: f64,
    pub b: f64,
}

impl SupportInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a < b {
            Ok(SupportInterval { a, b })
        } else {
            Err(Error::DegenerateInterval(b - a))
        }
    }
    fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    fn half(&self) -> f64 {
        0.5 * (self.b - self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumData {
    pub support: SupportInterval,
    pub h0: Polynomial,
    pub h1: Polynomial,
    pub h2: Polynomial,
    /// Variational constant of the undeformed measure (s = t = 0).
    pub ell: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SupportOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        SupportOptions {
            max_iterations: 100,
            tolerance: 1e-14,
        }
    }
}

fn chebyshev_order(p: &Polynomial) -> usize {
    p.degree().unwrap_or(0) + 4
}

/// Damped Newton on the two moment conditions in the (midpoint, half-width) variables.
pub fn solve_support(
    v0: &Polynomial,
    guess: SupportInterval,
    opts: SupportOptions,
) -> Result<SupportInterval> {
    let d1 = v0.derivative();
    let d2 = d1.derivative();
    let (w, weight) = gauss_chebyshev(chebyshev_order(v0) + 2);
    let residual = |m: f64, r: f64| -> (f64, f64) {
        let mut f1 = 0.0;
        let mut f2 = 0.0;
        for &wk in &w {
            let u = m + r * wk;
            let vp = d1.eval(u);
            f1 += vp;
            f2 += u * vp;
        }
        (weight * f1, weight * f2 - 2.0 * PI)
    };
    let (mut m, mut r) = (guess.mid(), guess.half());
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let (f1, f2) = residual(m, r);
        let norm = f1.hypot(f2);
        last = norm;
        if norm < opts.tolerance {
            let (mm, rr) = refine_support_mp(v0, m, r);
            return SupportInterval::new(mm - rr, mm + rr);
        }
        let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
        for &wk in &w {
            let u = m + r * wk;
            let vp = d1.eval(u);
            let vpp = d2.eval(u);
            j11 += vpp;
            j12 += wk * vpp;
            j21 += vp + u * vpp;
            j22 += wk * (vp + u * vpp);
        }
        let (j11, j12, j21, j22) = (j11 * weight, j12 * weight, j21 * weight, j22 * weight);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dm = -(j22 * f1 - j12 * f2) / det;
        let dr = -(-j21 * f1 + j11 * f2) / det;
        let mut lambda = 1.0;
        loop {
            let (nm, nr) = (m + lambda * dm, r + lambda * dr);
            if nr > 0.0 {
                let (g1, g2) = residual(nm, nr);
                if g1.hypot(g2) < norm || lambda < 1.0 / 64.0 {
                    m = nm;
                    r = nr;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::DegenerateInterval(2.0 * r));
            }
        }
        if r < 1e-10 {
            return Err(Error::DegenerateInterval(2.0 * r));
        }
        if (lambda * dm).abs().max((lambda * dr).abs()) < 1e-15 * (1.0 + m.abs() + r) {
            let (f1, f2) = residual(m, r);
            if f1.hypot(f2) < 1e-10 {
                return SupportInterval::new(m - r, m + r);
            }
        }
        if norm < 1e-11 {
            // Close enough for the extended-precision finish; a critical edge makes
            // the double-precision residual flat in one direction.
            let (mm, rr) = refine_support_mp(v0, m, r);
            return SupportInterval::new(mm - rr, mm + rr);
        }
    }
    Err(Error::NoConvergence {
        what: "solve_support",
        iterations: opts.max_iterations,
        residual: last,
    })
}

/// (1/pi) * integral of q(m + r w) / sqrt(1 - w^2) over [-1, 1] with its m- and r-derivatives,
/// expanded in closed form so it can be evaluated at any precision.
fn chebyshev_mean_mp(ctx: &MpCtx, q: &[Mp], m: &Mp, r: &Mp) -> (Mp, Mp, Mp) {
    let n = q.len();
    let mut mp_pow = vec![ctx.int(1)];
    let mut r_pow = vec![ctx.int(1)];
    for k in 1..=n {
        mp_pow.push(ctx.mul(&mp_pow[k - 1], m));
        r_pow.push(ctx.mul(&r_pow[k - 1], r));
    }
    let mut val = ctx.int(0);
    let mut dm = ctx.int(0);
    let mut dr = ctx.int(0);
    for (k, qk) in q.iter().enumerate() {
        for j in (0..=k).step_by(2) {
            let cj = binomial(j, j / 2) / 2f64.powi(j as i32);
            let coef = ctx.mul(qk, &ctx.f(binomial(k, j) * cj));
            val = ctx.add(&val, &ctx.mul(&coef, &ctx.mul(&mp_pow[k - j], &r_pow[j])));
            if k > j {
                let t = ctx.mul(&ctx.f((k - j) as f64), &ctx.mul(&mp_pow[k - j - 1], &r_pow[j]));
                dm = ctx.add(&dm, &ctx.mul(&coef, &t));
            }
            if j > 0 {
                let t = ctx.mul(&ctx.f(j as f64), &ctx.mul(&mp_pow[k - j], &r_pow[j - 1]));
                dr = ctx.add(&dr, &ctx.mul(&coef, &t));
            }
        }
    }
    (val, dm, dr)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Newton on the moment conditions at 256 bits. Near a critical edge the conditions vanish
/// to third order, so convergence is linear there; extra precision makes up for it.
fn refine_support_mp(v0: &Polynomial, m0: f64, r0: f64) -> (f64, f64) {
    let mut ctx = MpCtx::with_bits(256);
    let vp: Vec<Mp> = v0.derivative().rationals().iter().map(|c| ctx.rational(c)).collect();
    let mut uvp = vec![ctx.int(0)];
    uvp.extend(vp.iter().cloned());
    let two = ctx.int(2);
    let (mut m, mut r) = (ctx.f(m0), ctx.f(r0));
    for _ in 0..400 {
        let (f1, a11, a12) = chebyshev_mean_mp(&ctx, &vp, &m, &r);
        let (g, a21, a22) = chebyshev_mean_mp(&ctx, &uvp, &m, &r);
        let f2 = ctx.sub(&g, &two);
        let det = ctx.sub(&ctx.mul(&a11, &a22), &ctx.mul(&a12, &a21));
        if det.is_zero() {
            break;
        }
        let dm = ctx.div(&ctx.sub(&ctx.mul(&a12, &f2), &ctx.mul(&a22, &f1)), &det);
        let dr = ctx.div(&ctx.sub(&ctx.mul(&a21, &f1), &ctx.mul(&a11, &f2)), &det);
        let step = to_f64(&dm).abs().max(to_f64(&dr).abs());
        if !step.is_finite() || step > 0.5 * to_f64(&r).abs() {
            break;
        }
        m = ctx.add(&m, &dm);
        r = ctx.add(&r, &dr);
        if step < 1e-32 {
            break;
        }
    }
    let (mf, rf) = (to_f64(&m), to_f64(&r));
    if mf.is_finite() && rf > 0.0 && (mf - m0).abs() < 1e-2 && (rf - r0).abs() < 1e-2 {
        (mf, rf)
    } else {
        (m0, r0)
    }
}

/// Binomial series of (1 - x)^{-1/2} and (1 - x)^{1/2}.
fn half_binomial_series(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut inv = vec![1.0; n];
    let mut sq = vec![1.0; n];
    for i in 1..n {
        inv[i] = inv[i - 1] * (2 * i - 1) as f64 / (2 * i) as f64;
        sq[i] = -inv[i] / (2 * i - 1) as f64;
    }
    (inv, sq)
}

/// Coefficients of the product of two series in a/z and b/z.
fn endpoint_series(coef: &[f64], sup: SupportInterval) -> Vec<f64> {
    let n = coef.len();
    let pa: Vec<f64> = (0..n).map(|i| coef[i] * sup.a.powi(i as i32)).collect();
    let pb: Vec<f64> = (0..n).map(|i| coef[i] * sup.b.powi(i as i32)).collect();
    (0..n)
        .map(|k| (0..=k).map(|i| pa[i] * pb[k - i]).sum())
        .collect()
}

/// Polynomial part at infinity of V0'(z)/R(z).
pub fn compute_h0(v0: &Polynomial, sup: SupportInterval) -> Polynomial {
    let vp = v0.derivative();
    let deg = match vp.degree() {
        Some(d) => d,
        None => return Polynomial::zero(),
    };
    let (inv, _) = half_binomial_series(deg + 1);
    let e = endpoint_series(&inv, sup);
    let v = vp.coeffs();
    let out = (0..deg)
        .map(|p| ((p + 1)..=deg).map(|m| v[m] * e[m - 1 - p]).sum())
        .collect();
    Polynomial::new(out)
}

/// Polynomial part at infinity of R(z) V_j'(z).
pub fn compute_hj(vj: &Polynomial, sup: SupportInterval) -> Polynomial {
    let vp = vj.derivative();
    let deg = match vp.degree() {
        Some(d) => d,
        None => return Polynomial::zero(),
    };
    let (_, sq) = half_binomial_series(deg + 2);
    let d = endpoint_series(&sq, sup);
    let v = vp.coeffs();
    let out = (0..=deg + 1)
        .map(|p| {
            (p.saturating_sub(1)..=deg)
                .filter(|&m| m + 1 >= p)
                .map(|m| v[m] * d[m + 1 - p])
                .sum()
        })
        .collect();
    Polynomial::new(out)
}

impl EquilibriumData {
    pub fn compute(f: &DeformedFamily, guess: SupportInterval) -> Result<Self> {
        let support = solve_support(&f.v0, guess, SupportOptions::default())?;
        Ok(Self::from_support(f, support))
    }

    pub fn from_support(f: &DeformedFamily, support: SupportInterval) -> Self {
        let h0 = compute_h0(&f.v0, support);
        let h1 = compute_hj(&f.v1, support);
        let h2 = compute_hj(&f.v2, support);
        let mut eq = EquilibriumData {
            support,
            h0,
            h1,
            h2,
            ell: 0.0,
        };
        let m = support.mid();
        eq.ell = log_potential(&eq, 0.0, 0.0, m) * 2.0 - f.v0.eval(m);
        eq
    }

    /// R(z) = ((z-a)(z-b))^{1/2}, cut on [a,b], R(z) ~ z at infinity.
    pub fn sqrt_map(&self, z: Complex64) -> Complex64 {
        (z - self.support.a).sqrt() * (z - self.support.b).sqrt()
    }

    /// Boundary value from the upper side: i sqrt((x-a)(b-x)).
    pub fn sqrt_map_plus(&self, x: f64) -> Complex64 {
        Complex64::new(0.0, ((x - self.support.a) * (self.support.b - x)).sqrt())
    }

    fn deformation(&self, s: f64, t: f64) -> Polynomial {
        Polynomial::zero().add_scaled(&self.h1, s).add_scaled(&self.h2, t)
    }
}

/// Density of nu_{s,t} = nu_0 + s nu_1 + t nu_2 at an interior point.
pub fn density(eq: &EquilibriumData, s: f64, t: f64, x: f64) -> Result<f64> {
    let SupportInterval { a, b } = eq.support;
    if !(x > a && x < b) {
        return Err(Error::OutOfSupport { x, a, b });
    }
    let q = ((x - a) * (b - x)).sqrt();
    let psi0 = eq.h0.eval(x) * q / (2.0 * PI);
    let psi12 = -(s * eq.h1.eval(x) + t * eq.h2.eval(x)) / (2.0 * PI * q);
    Ok(psi0 + psi12)
}

/// Component densities (rho0, psi1, psi2) at an interior point.
pub fn density_components(eq: &EquilibriumData, x: f64) -> Result<(f64, f64, f64)> {
    let rho0 = density(eq, 0.0, 0.0, x)?;
    let psi1 = density(eq, 1.0, 0.0, x)? - rho0;
    let psi2 = density(eq, 0.0, 1.0, x)? - rho0;
    Ok((rho0, psi1, psi2))
}

/// Numerator g with d nu_{s,t} = g(w) dw / sqrt(1 - w^2), u = m + r w.
fn chebyshev_numerator(eq: &EquilibriumData, s: f64, t: f64, w: f64) -> f64 {
    let (m, r) = (eq.support.mid(), eq.support.half());
    let u = m + r * w;
    (r * r * eq.h0.eval(u) * (1.0 - w * w) - eq.deformation(s, t).eval(u)) / (2.0 * PI)
}

fn numerator_degree(eq: &EquilibriumData) -> usize {
    let d0 = eq.h0.degree().map_or(0, |d| d + 2);
    let d1 = eq.h1.degree().unwrap_or(0);
    let d2 = eq.h2.degree().unwrap_or(0);
    d0.max(d1).max(d2)
}

/// (mass, first moment) of nu_{s,t}, exact up to rounding.
pub fn measure_moments(eq: &EquilibriumData, s: f64, t: f64) -> (f64, f64) {
    let (w, weight) = gauss_chebyshev(numerator_degree(eq) + 4);
    let (m, r) = (eq.support.mid(), eq.support.half());
    let mut mass = 0.0;
    let mut first = 0.0;
    for &wk in &w {
        let g = chebyshev_numerator(eq, s, t, wk);
        mass += g;
        first += (m + r * wk) * g;
    }
    (mass * weight, first * weight)
}

pub fn constants(eq: &EquilibriumData) -> Result<CriticalConstants> {
    let SupportInterval { a, b } = eq.support;
    let h0pp = eq.h0.nth_derivative(2).eval(b);
    if h0pp <= 0.0 || !h0pp.is_finite() {
        return Err(Error::AssumptionViolated(format!(
            "h0''(b) = {h0pp} must be positive at a critical edge"
        )));
    }
    let root = (b - a).sqrt();
    let c = (7.5 * h0pp * root).powf(2.0 / 7.0);
    let c1 = eq.h1.eval(b) / (c.sqrt() * root);
    let c2 = -eq.h2.derivative().eval(b) / (c.powf(1.5) * root);
    Ok(CriticalConstants { c, c1, c2 })
}

/// Chebyshev coefficients of a polynomial of degree <= `deg` sampled through `f`.
fn chebyshev_coefficients(deg: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = deg + 1;
    let theta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
    let vals: Vec<f64> = theta.iter().map(|th| f(th.cos())).collect();
    (0..n)
        .map(|k| {
            let s: f64 = theta
                .iter()
                .zip(&vals)
                .map(|(th, v)| v * (k as f64 * th).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if k == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

/// Integral of log|xi - w| T_k(w) / sqrt(1 - w^2) over [-1, 1].
fn log_chebyshev_moment(k: usize, xi: f64) -> f64 {
    let inside = xi.abs() <= 1.0;
    if k == 0 {
        if inside {
            -PI * LN_2
        } else {
            PI * ((xi.abs() + (xi * xi - 1.0).sqrt()) / 2.0).ln()
        }
    } else if inside {
        -PI * (k as f64 * xi.acos()).cos() / k as f64
    } else {
        let rho = xi.abs() - (xi * xi - 1.0).sqrt();
        let sign = if xi < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        -PI * sign * rho.powi(k as i32) / k as f64
    }
}

/// Log potential of nu_{s,t}: integral of log|x-u| d nu_{s,t}(u), in closed form.
pub fn log_potential(eq: &EquilibriumData, s: f64, t: f64, x: f64) -> f64 {
    let (m, r) = (eq.support.mid(), eq.support.half());
    let f = chebyshev_coefficients(numerator_degree(eq), |w| chebyshev_numerator(eq, s, t, w));
    let xi = (x - m) / r;
    let mut total = PI * f[0] * r.ln();
    for (k, fk) in f.iter().enumerate() {
        total += fk * log_chebyshev_moment(k, xi);
    }
    total
}

/// The same integral by subtracting the singular value and using composite Gauss-Legendre
/// in the angle variable; converges algebraically as panels grow.
pub fn log_potential_split(eq: &EquilibriumData, s: f64, t: f64, x: f64, panels: usize) -> f64 {
    let (m, r) = (eq.support.mid(), eq.support.half());
    let xi = (x - m) / r;
    let g = |phi: f64| chebyshev_numerator(eq, s, t, phi.cos());
    let (gx, gw) = gauss_legendre(8);
    let mut smooth = 0.0;
    if xi.abs() > 1.0 {
        // Off the support the integrand is smooth.
        let h = PI / (2 * panels) as f64;
        for p in 0..2 * panels {
            let c = (p as f64 + 0.5) * h;
            for (z, wz) in gx.iter().zip(&gw) {
                let phi = c + 0.5 * h * z;
                smooth += 0.5 * h * wz * (xi - phi.cos()).abs().ln() * g(phi);
            }
        }
        let mass: f64 = {
            let (w, weight) = gauss_chebyshev(numerator_degree(eq) + 4);
            w.iter().map(|&wk| chebyshev_numerator(eq, s, t, wk)).sum::<f64>() * weight
        };
        return smooth + mass * r.ln();
    }
    let phi_star = xi.acos();
    let g_star = g(phi_star);
    for (lo, hi) in [(0.0, phi_star), (phi_star, PI)] {
        if hi <= lo {
            continue;
        }
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (z, wz) in gx.iter().zip(&gw) {
                let phi = c + 0.5 * h * z;
                let d = (xi - phi.cos()).abs();
                smooth += 0.5 * h * wz * d.ln() * (g(phi) - g_star);
            }
        }
    }
    let total_mass: f64 = {
        let (w, weight) = gauss_chebyshev(numerator_degree(eq) + 4);
        w.iter().map(|&wk| chebyshev_numerator(eq, s, t, wk)).sum::<f64>() * weight
    };
    smooth + g_star * (-PI * LN_2) + total_mass * r.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKernelMethod {
    /// Closed-form Chebyshev moments.
    Chebyshev,
    /// Singularity subtraction with the given number of panels per side.
    Split(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalOutcome {
    pub ell: f64,
    pub max_interior_deviation: f64,
    /// (x, E(x) - ell) for every exterior point.
    pub exterior: Vec<(f64, f64)>,
    pub report: Report,
}

/// E(x) = 2 * log potential - V_{s,t}(x); constant on the support, below it outside.
pub fn variational_check(
    f: &DeformedFamily,
    eq: &EquilibriumData,
    s: f64,
    t: f64,
    interior_grid: &[f64],
    exterior_points: &[f64],
    method: LogKernelMethod,
    smallness: f64,
) -> Result<VariationalOutcome> {
    if s.abs() > smallness || t.abs() > smallness {
        return Err(Error::OutOfRange {
            what: "|s|, |t|",
            value: s.abs().max(t.abs()),
            lo: 0.0,
            hi: smallness,
        });
    }
    let v = f.combined(s, t);
    let e = |x: f64| {
        let lp = match method {
            LogKernelMethod::Chebyshev => log_potential(eq, s, t, x),
            LogKernelMethod::Split(p) => log_potential_split(eq, s, t, x, p),
        };
        2.0 * lp - v.eval(x)
    };
    let interior: Vec<f64> = interior_grid.iter().map(|&x| e(x)).collect();
    if interior.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite log potential".into()));
    }
    let ell = interior.iter().sum::<f64>() / interior.len().max(1) as f64;
    let dev = interior
        .iter()
        .map(|v| (v - ell).abs())
        .fold(0.0, f64::max);
    let exterior: Vec<(f64, f64)> = exterior_points
        .iter()
        .map(|&x| (x, e(x) - ell))
        .collect();
    let mut report = Report::default();
    report.push_small("interior deviation", dev, 1e-8);
    for &(x, gap) in &exterior {
        report.push(format!("exterior gap at x = {x}"), gap, 0.0, gap < 0.0);
    }
    Ok(VariationalOutcome {
        ell,
        max_interior_deviation: dev,
        exterior,
        report,
    })
}

/// Interior grid of `n` points strictly inside the support.
pub fn interior_grid(eq: &EquilibriumData, n: usize) -> Vec<f64> {
    let SupportInterval { a, b } = eq.support;
    (0..n)
        .map(|k| a + (b - a) * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// Checks the critical-edge hypotheses and reports residuals.
pub fn verify_assumptions(f: &DeformedFamily, eq: &EquilibriumData) -> Report {
    let SupportInterval { a, b } = eq.support;
    let h0 = &eq.h0;
    let mut rep = Report::default();
    let h0a = h0.eval(a);
    rep.push("h0(a) > 0", h0a, 0.0, h0a > 0.0);
    rep.push_small("h0(b) = 0", h0.eval(b), 1e-10);
    rep.push_small("h0'(b) = 0", h0.derivative().eval(b), 1e-10);
    let h0pp = h0.nth_derivative(2).eval(b);
    rep.push("h0''(b) > 0", h0pp, 0.0, h0pp > 1e-10);

    let v2p = f.v2.derivative();
    let (w, weight) = gauss_chebyshev(chebyshev_order(&f.v2) + 2);
    let (m, r) = (eq.support.mid(), eq.support.half());
    let crit: f64 = w
        .iter()
        .map(|&wk| {
            let u = m + r * wk;
            (u - a) * v2p.eval(u)
        })
        .sum::<f64>()
        * weight;
    rep.push_small("critical condition", crit, 1e-12);

    let (m1, _) = measure_moments(eq, 1.0, 0.0);
    let (m0, _) = measure_moments(eq, 0.0, 0.0);
    let (m2, _) = measure_moments(eq, 0.0, 1.0);
    rep.push_small("zero mass nu1", m1 - m0, 1e-12);
    rep.push_small("zero mass nu2", m2 - m0, 1e-12);

    let samples = 400;
    let min_h0 = (1..samples)
        .map(|k| h0.eval(a + (b - a) * k as f64 / samples as f64))
        .fold(f64::INFINITY, f64::min);
    rep.push("interior positivity of h0", min_h0, 0.0, min_h0 > 0.0);
    rep
}
