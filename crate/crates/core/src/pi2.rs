//! The pole-free real solution of the fourth-order Painleve I hierarchy equation
//!
//!   y'''' = 240 (t y - s) - 40 y^3 - 10 y'^2 - 20 y y''
//!
//! on [-L, L], with y and y' pinned to the two-term asymptotic series at both ends.
//! Sixth-order finite differences, damped Newton, banded LU.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dense_solve, BandMatrix};

/// Two-term expansion of y(s, t) as s -> +-infinity.
pub fn asymptotic_y(s: f64, t: f64) -> f64 {
    let a = s.abs();
    let sg = s.signum();
    -sg * (6.0 * a).cbrt() - sg * 6f64.powf(2.0 / 3.0) * t / (3.0 * a.cbrt())
}

/// Term-wise s-derivative of [`asymptotic_y`].
pub fn asymptotic_ys(s: f64, t: f64) -> f64 {
    let a = s.abs();
    -6f64.cbrt() / 3.0 * a.powf(-2.0 / 3.0) + 6f64.powf(2.0 / 3.0) * t / 9.0 * a.powf(-4.0 / 3.0)
}

/// Fornberg's finite-difference weights for derivatives 0..=m at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

const HALF: usize = 4;
const ONE_SIDED: usize = 2 * HALF + 2;

/// Stencil for node `i` of `0..=n`: first index and weights for derivatives 1..=4 (unit spacing).
struct Stencils {
    centered: Vec<Vec<f64>>,
    left: Vec<Vec<Vec<f64>>>,
    right: Vec<Vec<Vec<f64>>>,
}

fn stencils() -> &'static Stencils {
    static S: OnceLock<Stencils> = OnceLock::new();
    S.get_or_init(|| {
        let centered_nodes: Vec<f64> = (-(HALF as i64)..=HALF as i64).map(|k| k as f64).collect();
        let transpose = |w: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (1..=4).map(|d| w.iter().map(|row| row[d]).collect()).collect()
        };
        let centered = transpose(fd_weights(0.0, &centered_nodes, 4));
        let side_nodes: Vec<f64> = (0..ONE_SIDED).map(|k| k as f64).collect();
        let left = (0..HALF).map(|i| transpose(fd_weights(i as f64, &side_nodes, 4))).collect();
        let right = (0..HALF)
            .map(|i| transpose(fd_weights((ONE_SIDED - 1 - i) as f64, &side_nodes, 4)))
            .collect();
        Stencils {
            centered,
            left,
            right,
        }
    })
}

/// (first column, weights[d-1][..]) for node i on a grid 0..=n.
fn stencil_at(i: usize, n: usize) -> (usize, &'static [Vec<f64>]) {
    let s = stencils();
    if i >= HALF && i + HALF <= n {
        (i - HALF, &s.centered)
    } else if i < HALF {
        (0, &s.left[i])
    } else {
        (n + 1 - ONE_SIDED, &s.right[n - i])
    }
}

/// y', y'', y''', y'''' at every node.
fn derivatives(y: &[f64], h: f64) -> [Vec<f64>; 4] {
    let n = y.len() - 1;
    let mut out = [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]];
    for i in 0..=n {
        let (j0, w) = stencil_at(i, n);
        for d in 0..4 {
            let scale = h.powi(-(d as i32 + 1));
            out[d][i] = scale * w[d].iter().enumerate().map(|(k, c)| c * y[j0 + k]).sum::<f64>();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pi2Options {
    pub max_newton: usize,
    pub t_step: f64,
    /// Initial L for the upward continuation fallback.
    pub l_start: f64,
}

impl Default for Pi2Options {
    fn default() -> Self {
        Pi2Options {
            max_newton: 60,
            t_step: 0.05,
            l_start: 20.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PI2Solution {
    pub t: f64,
    pub l: f64,
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub ys: Vec<f64>,
    pub yss: Vec<f64>,
    pub ysss: Vec<f64>,
    pub yssss: Vec<f64>,
    /// Antiderivative of -y with h(-L) = 0.
    pub h: Vec<f64>,
    /// Largest plug-in residual over the nodes where the equation is imposed.
    pub residual_norm: f64,
    pub newton_steps: usize,
}

/// y and its first four s-derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YJet {
    pub y: f64,
    pub ys: f64,
    pub yss: f64,
    pub ysss: f64,
    pub yssss: f64,
}

impl YJet {
    /// s - t y + y^3/6 + (y_s^2 + 2 y y_ss)/24 + y_ssss/240, zero on solutions.
    pub fn residual(&self, s: f64, t: f64) -> f64 {
        s - t * self.y
            + self.y.powi(3) / 6.0
            + (self.ys * self.ys + 2.0 * self.y * self.yss) / 24.0
            + self.yssss / 240.0
    }
}

fn grid(l: f64, n_points: usize) -> (Vec<f64>, f64) {
    let n = n_points - 1;
    let h = 2.0 * l / n as f64;
    ((0..=n).map(|i| -l + h * i as f64).collect(), h)
}

fn initial_guess(s: &[f64]) -> Vec<f64> {
    s.iter()
        .map(|&x| -6f64.cbrt() * x * (x * x + 1.0).powf(-1.0 / 3.0))
        .collect()
}

struct System<'a> {
    s: &'a [f64],
    h: f64,
    t: f64,
    bc: [f64; 4],
}

impl System<'_> {
    fn n(&self) -> usize {
        self.s.len() - 1
    }

    fn residual(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n();
        let [d1, d2, _, d4] = derivatives(y, self.h);
        let mut f: Vec<f64> = (0..=n)
            .map(|i| {
                d4[i] + 40.0 * y[i].powi(3) + 10.0 * d1[i] * d1[i] + 20.0 * y[i] * d2[i]
                    - 240.0 * (self.t * y[i] - self.s[i])
            })
            .collect();
        f[0] = y[0] - self.bc[0];
        f[1] = d1[0] - self.bc[1];
        f[n - 1] = d1[n] - self.bc[3];
        f[n] = y[n] - self.bc[2];
        f
    }

    fn jacobian(&self, y: &[f64]) -> BandMatrix {
        let n = self.n();
        let kl = ONE_SIDED - 1;
        let mut jm = BandMatrix::zeros(n + 1, kl, kl);
        let [d1, d2, _, _] = derivatives(y, self.h);
        let h = self.h;
        for i in 2..=n - 2 {
            let (j0, w) = stencil_at(i, n);
            for k in 0..w[0].len() {
                let v = w[3][k] / h.powi(4) + 20.0 * d1[i] * w[0][k] / h + 20.0 * y[i] * w[1][k] / (h * h);
                jm.add(i, j0 + k, v);
            }
            jm.add(i, i, 120.0 * y[i] * y[i] + 20.0 * d2[i] - 240.0 * self.t);
        }
        jm.set(0, 0, 1.0);
        jm.set(n, n, 1.0);
        let (j0, w) = stencil_at(0, n);
        for k in 0..w[0].len() {
            jm.set(1, j0 + k, w[0][k] / h);
        }
        let (j0, w) = stencil_at(n, n);
        for k in 0..w[0].len() {
            jm.set(n - 1, j0 + k, w[0][k] / h);
        }
        jm
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(t: f64, l: f64, n_points: usize, tol: f64, mut y: Vec<f64>, opts: &Pi2Options) -> Result<PI2Solution> {
    let (s, h) = grid(l, n_points);
    let sys = System {
        s: &s,
        h,
        t,
        bc: [asymptotic_y(-l, t), asymptotic_ys(-l, t), asymptotic_y(l, t), asymptotic_ys(l, t)],
    };
    let blowup = 50.0 + 10.0 * (6.0 * l).cbrt();
    let mut f = sys.residual(&y);
    let mut norm = max_abs(&f);
    let mut prev_step = f64::INFINITY;
    for step in 1..=opts.max_newton {
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let dy = sys.jacobian(&y).solve(rhs).ok_or(Error::NoConvergence {
            what: "pi2 Newton (singular Jacobian)",
            iterations: step,
            residual: norm,
        })?;
        let step_size = max_abs(&dy);
        // Below ~1e-6 the update is dominated by rounding in the fourth-difference stencil;
        // a step that no longer contracts means the floor has been reached.
        if step_size < tol || (step_size < 1e-6 && step_size > 0.25 * prev_step) {
            let y: Vec<f64> = y.iter().zip(&dy).map(|(a, d)| a + d).collect();
            return Ok(assemble(t, l, s, h, y, step));
        }
        let mut lambda = 1.0;
        let (trial, tf, tn) = loop {
            let trial: Vec<f64> = y.iter().zip(&dy).map(|(a, d)| a + lambda * d).collect();
            let tf = sys.residual(&trial);
            let tn = max_abs(&tf);
            if (tn.is_finite() && tn <= (1.0 - 1e-4 * lambda) * norm) || lambda <= 1.0 / 16.0 {
                break (trial, tf, tn);
            }
            lambda *= 0.5;
        };
        if let Some((i, v)) = trial.iter().enumerate().find(|(_, v)| !v.is_finite() || v.abs() > blowup) {
            return Err(Error::PoleSuspected {
                s: s[i],
                magnitude: v.abs(),
            });
        }
        y = trial;
        f = tf;
        norm = tn;
        prev_step = step_size;
    }
    Err(Error::NoConvergence {
        what: "pi2 Newton",
        iterations: opts.max_newton,
        residual: norm,
    })
}

fn assemble(t: f64, l: f64, s: Vec<f64>, h: f64, y: Vec<f64>, steps: usize) -> PI2Solution {
    let [ys, yss, ysss, yssss] = derivatives(&y, h);
    let n = s.len() - 1;
    let residual_norm = (2..=n - 2)
        .map(|i| {
            YJet {
                y: y[i],
                ys: ys[i],
                yss: yss[i],
                ysss: ysss[i],
                yssss: yssss[i],
            }
            .residual(s[i], t)
            .abs()
        })
        .fold(0.0, f64::max);
    let mut sol = PI2Solution {
        t,
        l,
        grid: s,
        y,
        ys,
        yss,
        ysss,
        yssss,
        h: vec![0.0; n + 1],
        residual_norm,
        newton_steps: steps,
    };
    for i in 0..n {
        let poly = sol.local_poly(i);
        let area: f64 = poly.iter().enumerate().map(|(p, c)| c / (p + 1) as f64).sum::<f64>() * h;
        sol.h[i + 1] = sol.h[i] - area;
    }
    sol
}

/// Solves at fixed t, continuing in t from 0 in steps of `t_step` and, if a direct solve
/// at the requested L fails, upward in L from `l_start`.
/// Grid size used when the solution feeds the Lax pair: the requested mesh for t <= 0,
/// a quarter of it for t > 0, where y steepens (|y_ssss| ~ 1e4 at t = 1) and the
/// coarse grid leaves ~1e-5 errors in the jet.
pub fn lax_points(t: f64, l: f64, mesh: f64) -> usize {
    let n = (2.0 * l / mesh).round() as usize;
    if t > 0.0 {
        4 * n + 1
    } else {
        n + 1
    }
}

pub fn solve_y(t: f64, l: f64, n_points: usize, tol: f64) -> Result<PI2Solution> {
    solve_y_with(t, l, n_points, tol, &Pi2Options::default())
}

pub fn solve_y_with(t: f64, l: f64, n_points: usize, tol: f64, opts: &Pi2Options) -> Result<PI2Solution> {
    validate(l, n_points)?;
    let (s, _) = grid(l, n_points);
    let base = match newton(0.0, l, n_points, tol, initial_guess(&s), opts) {
        Ok(sol) => sol,
        Err(e) if l > opts.l_start => {
            let coarse = solve_y_with(0.0, opts.l_start, mesh_points(opts.l_start, 2.0 * l / (n_points - 1) as f64), tol, opts)
                .map_err(|_| e)?;
            let guess = extend_guess(&coarse, &s, 0.0);
            newton(0.0, l, n_points, tol, guess, opts)?
        }
        Err(e) => return Err(e),
    };
    if t == 0.0 {
        return Ok(base);
    }
    let steps = (t.abs() / opts.t_step).ceil() as usize;
    let (mut prev, mut sol): (Option<PI2Solution>, PI2Solution) = (None, base);
    for k in 1..=steps {
        let tk = if k == steps { t } else { t * k as f64 / steps as f64 };
        // Secant predictor from the last two accepted solutions.
        let guess = match &prev {
            Some(p) => {
                let r = (tk - sol.t) / (sol.t - p.t);
                sol.y.iter().zip(&p.y).map(|(a, b)| a + r * (a - b)).collect()
            }
            None => sol.y.clone(),
        };
        let next = newton(tk, l, n_points, tol, guess, opts)?;
        prev = Some(std::mem::replace(&mut sol, next));
    }
    Ok(sol)
}

/// One Newton solve at parameter t seeded with a neighbouring solution on the same grid.
pub fn solve_y_seeded(t: f64, seed: &PI2Solution, tol: f64, opts: &Pi2Options) -> Result<PI2Solution> {
    newton(t, seed.l, seed.grid.len(), tol, seed.y.clone(), opts)
}

fn mesh_points(l: f64, mesh: f64) -> usize {
    (2.0 * l / mesh).round() as usize + 1
}

fn extend_guess(coarse: &PI2Solution, s: &[f64], t: f64) -> Vec<f64> {
    s.iter()
        .map(|&x| match eval_y(coarse, x) {
            Ok(j) => j.y,
            Err(_) => asymptotic_y(x, t),
        })
        .collect()
}

fn validate(l: f64, n_points: usize) -> Result<()> {
    if !(l >= 20.0) {
        return Err(Error::OutOfRange {
            what: "L",
            value: l,
            lo: 20.0,
            hi: f64::INFINITY,
        });
    }
    if n_points < 2 * ONE_SIDED {
        return Err(Error::OutOfRange {
            what: "n_points",
            value: n_points as f64,
            lo: (2 * ONE_SIDED) as f64,
            hi: f64::INFINITY,
        });
    }
    let mesh = 2.0 * l / (n_points - 1) as f64;
    if mesh > 0.05 + 1e-12 {
        return Err(Error::OutOfRange {
            what: "mesh",
            value: mesh,
            lo: 0.0,
            hi: 0.05,
        });
    }
    Ok(())
}

fn falling(p: usize, k: usize) -> f64 {
    ((p - k + 1)..=p).map(|q| q as f64).product()
}

const LAGRANGE: usize = 10;

/// Lagrange weights on the nodes 0..LAGRANGE at a non-node position x.
fn lagrange_weights(x: f64) -> [f64; LAGRANGE] {
    let mut w = [0.0; LAGRANGE];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        for m in 0..LAGRANGE {
            if m != j {
                v *= (x - m as f64) / (j as f64 - m as f64);
            }
        }
        *wj = v;
    }
    w
}

/// Inverse of the 5x5 block that maps the top five monomial coefficients to the derivative
/// mismatch at the far end of a unit interval.
fn mismatch_inverse() -> &'static [[f64; 5]; 5] {
    static M: OnceLock<[[f64; 5]; 5]> = OnceLock::new();
    M.get_or_init(|| {
        let mut out = [[0.0; 5]; 5];
        let rows: Vec<Vec<f64>> = (0..5).map(|k| (5..10).map(|p| falling(p, k)).collect()).collect();
        for c in 0..5 {
            let mut rhs = vec![0.0; 5];
            rhs[c] = 1.0;
            let col = dense_solve(rows.clone(), rhs).expect("Hermite block is nonsingular");
            for r in 0..5 {
                out[r][c] = col[r];
            }
        }
        out
    })
}

impl PI2Solution {
    pub fn mesh(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Degree-9 Hermite interpolant on interval i matching y through y_ssss at both ends,
    /// as monomial coefficients in (s - s_i)/h. Used for integrating y.
    fn local_poly(&self, i: usize) -> [f64; 10] {
        let h = self.mesh();
        let cols = [&self.y, &self.ys, &self.yss, &self.ysss, &self.yssss];
        let (o, f) = (i, i + 1);
        let mut poly = [0.0; 10];
        for k in 0..5 {
            poly[k] = h.powi(k as i32) * cols[k][o] / falling(k, k);
        }
        let mut d = [0.0; 5];
        for k in 0..5 {
            let near: f64 = (k..5).map(|p| falling(p, k) * poly[p]).sum();
            d[k] = h.powi(k as i32) * cols[k][f] - near;
        }
        let inv = mismatch_inverse();
        for r in 0..5 {
            poly[5 + r] = (0..5).map(|c| inv[r][c] * d[c]).sum();
        }
        poly
    }

    fn locate(&self, s: f64) -> Result<(usize, f64)> {
        let l = self.l;
        let slack = 1e-12 * l;
        if !(s >= -l - slack && s <= l + slack) {
            return Err(Error::OutOfRange {
                what: "s",
                value: s,
                lo: -l,
                hi: l,
            });
        }
        let n = self.grid.len() - 1;
        let h = self.mesh();
        let i = (((s + l) / h).floor().max(0.0) as usize).min(n - 1);
        Ok((i, (s - self.grid[i]) / h))
    }
}

/// Interpolated y and derivatives (10-point Lagrange per column); reproduces stored node values exactly.
pub fn eval_y(sol: &PI2Solution, s: f64) -> Result<YJet> {
    let (i, tau) = sol.locate(s)?;
    if tau == 0.0 {
        return Ok(YJet {
            y: sol.y[i],
            ys: sol.ys[i],
            yss: sol.yss[i],
            ysss: sol.ysss[i],
            yssss: sol.yssss[i],
        });
    }
    // Each column is interpolated on its own: rebuilding y'''' from nodal y values would
    // amplify their rounding by h^-4.
    let n = sol.grid.len() - 1;
    let j0 = i.saturating_sub(LAGRANGE / 2 - 1).min(n + 1 - LAGRANGE);
    let x = (s - sol.grid[j0]) / sol.mesh();
    let w = lagrange_weights(x);
    let cols = [&sol.y, &sol.ys, &sol.yss, &sol.ysss, &sol.yssss];
    let mut d = [0.0; 5];
    for (k, col) in cols.iter().enumerate() {
        d[k] = w.iter().enumerate().map(|(m, wm)| wm * col[j0 + m]).sum();
    }
    Ok(YJet {
        y: d[0],
        ys: d[1],
        yss: d[2],
        ysss: d[3],
        yssss: d[4],
    })
}

/// h(s) = -(integral of y from -L to s), from the same interpolant.
pub fn eval_h(sol: &PI2Solution, s: f64) -> Result<f64> {
    let (i, tau) = sol.locate(s)?;
    let poly = sol.local_poly(i);
    let partial: f64 = poly
        .iter()
        .enumerate()
        .map(|(p, c)| c * tau.powi(p as i32 + 1) / (p + 1) as f64)
        .sum();
    Ok(sol.h[i] - partial * sol.mesh())
}
