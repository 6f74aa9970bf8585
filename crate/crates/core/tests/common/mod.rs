//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use edgecrit::poly::Polynomial;
use num_complex::Complex64;

/// Coefficients 0..=deg of the polynomial part at infinity of `g`, from a
/// trapezoid rule on |z| = rho.
pub fn polynomial_part(g: impl Fn(Complex64) -> Complex64, deg: usize, rho: f64) -> Vec<f64> {
    let m = 512;
    (0..=deg)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let th = 2.0 * PI * j as f64 / m as f64;
                let z = Complex64::from_polar(rho, th);
                acc += g(z) * Complex64::from_polar(rho.powi(-(k as i32)), -(k as f64) * th);
            }
            acc.re / m as f64
        })
        .collect()
}

pub fn r_of(z: Complex64, a: f64, b: f64) -> Complex64 {
    (z - a).sqrt() * (z - b).sqrt()
}

/// -(1/pi) PV int_a^b sqrt((b-u)(u-a)) V'(u) / (u - x) du, with u = m + r cos(th).
/// The PV of 1/(cos th - cos th_x) over [0, pi] vanishes, so subtracting the
/// numerator at th_x leaves a smooth integrand.
pub fn pv_h(vprime: &Polynomial, a: f64, b: f64, x: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let thx = ((x - m) / r).acos();
    let num = |th: f64| th.sin().powi(2) * vprime.eval(m + r * th.cos());
    let fx = num(thx);
    let (nodes, weights) = edgecrit::quad::gauss_legendre(200);
    let mut acc = 0.0;
    for (z, w) in nodes.iter().zip(&weights) {
        let th = 0.5 * PI * (z + 1.0);
        let d = th.cos() - thx.cos();
        let term = if d.abs() < 1e-13 { 0.0 } else { (num(th) - fx) / d };
        acc += 0.5 * PI * w * term;
    }
    -r * acc / PI
}

/// (c, c1, c2) from oracle h-polynomials on [a, b]; h2'(b) by a four-point
/// one-sided stencil, exact on cubics.
pub fn oracle_constants(v0: &Polynomial, v1: &Polynomial, v2: &Polynomial, a: f64, b: f64) -> (f64, f64, f64) {
    let d0 = v0.derivative();
    let h0 = Polynomial::new(polynomial_part(|z| d0.eval_complex(z) / r_of(z, a, b), 4, 12.0));
    let h1b = pv_h(&v1.derivative(), a, b, b);
    let d2 = v2.derivative();
    let step = 0.1;
    let h2 = |k: f64| pv_h(&d2, a, b, b - k * step);
    let h2pb = (11.0 * h2(0.0) - 18.0 * h2(1.0) + 9.0 * h2(2.0) - 2.0 * h2(3.0)) / (6.0 * step);
    let c = (7.5 * h0.nth_derivative(2).eval(b) * (b - a).sqrt()).powf(2.0 / 7.0);
    let c1 = h1b / (c.sqrt() * (b - a).sqrt());
    let c2 = -h2pb / (c.powf(1.5) * (b - a).sqrt());
    (c, c1, c2)
}
