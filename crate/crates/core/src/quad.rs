//! Gauss rules in double precision.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// First-kind Gauss-Chebyshev: integrates f(w)/sqrt(1-w^2) on [-1,1] exactly for deg f < 2n.
pub fn gauss_chebyshev(n: usize) -> (Vec<f64>, f64) {
    let nodes = (1..=n)
        .map(|k| ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos())
        .collect();
    (nodes, PI / n as f64)
}

/// Composite Gauss-Legendre on [lo, hi] with `panels` equal panels of `m` nodes.
pub fn composite_gauss_legendre(lo: f64, hi: f64, panels: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(m);
    let h = (hi - lo) / panels as f64;
    let mut x = Vec::with_capacity(panels * m);
    let mut w = Vec::with_capacity(panels * m);
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(c + 0.5 * h * xi);
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}
