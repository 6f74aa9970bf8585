use std::f64::consts::PI;
use std::sync::OnceLock;

use edgecrit::equilibrium::{density, EquilibriumData, SupportInterval};
use edgecrit::orthopoly::{
    cd_kernel, discretization, orthonormal_eval, recurrence_table, weighted_eval, PrecisionConfig,
    RecurrenceTable,
};
use edgecrit::poly::Polynomial;
use edgecrit::potentials::{build_example_family, DeformedFamily};
use edgecrit::quad::composite_gauss_legendre;
use proptest::prelude::*;

fn single(v: Vec<f64>) -> DeformedFamily {
    DeformedFamily::unchecked(Polynomial::new(v), Polynomial::zero(), Polynomial::zero())
}

fn table(f: &DeformedFamily, n: usize, s: f64, t: f64) -> RecurrenceTable {
    let cfg = PrecisionConfig::default_for(f, n, s, t).unwrap();
    recurrence_table(f, n, s, t, &cfg).unwrap()
}

fn example16() -> &'static RecurrenceTable {
    static T: OnceLock<RecurrenceTable> = OnceLock::new();
    T.get_or_init(|| table(&build_example_family(), 16, 0.0, 0.0))
}

/// RKPW: Lanczos on diag(x) with starting vector sqrt(w), by plane rotations.
/// Returns (alpha_k, beta_k); beta_0 is the total mass.
fn rkpw(xs: &[f64], ws: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = xs.len();
    let mut p0 = xs.to_vec();
    let mut p1 = vec![0.0; m];
    p1[0] = ws[0];
    for k in 0..m - 1 {
        let mut pn = ws[k + 1];
        let (mut gam, mut sig, mut t) = (1.0, 0.0, 0.0);
        let xlam = xs[k + 1];
        for j in 0..=k + 1 {
            let rho = p1[j] + pn;
            let tmp = gam * rho;
            let tsig = sig;
            if rho <= 0.0 {
                gam = 1.0;
                sig = 0.0;
            } else {
                gam = p1[j] / rho;
                sig = pn / rho;
            }
            let tk = sig * (p0[j] - xlam) - gam * t;
            p0[j] -= tk - t;
            t = tk;
            pn = if sig <= 0.0 { tsig * p1[j] } else { t * t / sig };
            p1[j] = tmp;
        }
    }
    p0.truncate(n + 1);
    p1.truncate(n + 1);
    (p0, p1)
}

#[test]
fn hermite_recurrence() {
    // e^{-40 V} = e^{-x^2}.
    let f = single(vec![0.0, 0.0, 1.0 / 40.0]);
    let tab = table(&f, 40, 0.0, 0.0);
    for k in 1..=40 {
        let want = (k as f64 / 2.0).sqrt();
        assert!((tab.a_at(k) - want).abs() < 1e-10, "a_{k} = {}", tab.a_at(k));
    }
    for k in 0..=40 {
        assert!(tab.b_at(k).abs() < 1e-10);
    }
    let p2 = orthonormal_eval(&tab, 2, 1.0);
    let want = 1.0 / (2f64.sqrt() * PI.powf(0.25));
    assert!((p2 - want).abs() < 1e-12, "p_2(1) = {p2}");
    assert!((tab.kappa(0) - PI.powf(-0.25)).abs() < 1e-12);
}

#[test]
fn stieltjes_matches_rotation_lanczos() {
    let f = build_example_family();
    let tab = example16();
    let (xs, ws) = discretization(&f, 16, 0.0, 0.0, &tab.cfg).unwrap();
    let (alpha, beta) = rkpw(&xs, &ws, 16);
    for k in 0..16 {
        assert!((alpha[k] - tab.b_at(k)).abs() < 1e-12, "b_{k}: {} vs {}", alpha[k], tab.b_at(k));
    }
    for k in 1..=16 {
        assert!((beta[k].sqrt() - tab.a_at(k)).abs() < 1e-12, "a_{k}");
    }
}

/// Gram matrix of phi_0..phi_n on a finer composite rule than the engine uses.
fn gram(tab: &RecurrenceTable) -> Vec<Vec<f64>> {
    let (lo, hi) = tab.window;
    let (xs, ws) = composite_gauss_legendre(lo, hi, 97, 24);
    let mut g = vec![vec![0.0; tab.n + 1]; tab.n + 1];
    for (x, w) in xs.iter().zip(&ws) {
        let phi = weighted_eval(tab, *x);
        for j in 0..=tab.n {
            for k in 0..=tab.n {
                g[j][k] += w * phi[j] * phi[k];
            }
        }
    }
    g
}

#[test]
fn orthonormality() {
    let f = build_example_family();
    let tab = table(&f, 12, 0.0, 0.0);
    let g = gram(&tab);
    for j in 0..=12 {
        for k in 0..=12 {
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((g[j][k] - want).abs() < 1e-10, "<p_{j}, p_{k}> = {}", g[j][k]);
        }
    }
}

#[test]
fn reproducing_kernel() {
    let tab = example16();
    let (lo, hi) = tab.window;
    let (ys, ws) = composite_gauss_legendre(lo, hi, 80, 24);
    let trace: f64 = ys.iter().zip(&ws).map(|(y, w)| w * cd_kernel(tab, *y, *y)).sum();
    assert!((trace - 16.0).abs() < 1e-9, "trace = {trace}");
    for (x, z) in [(-1.0, 0.5), (0.3, 0.3), (1.8, -0.2)] {
        let lhs: f64 = ys
            .iter()
            .zip(&ws)
            .map(|(y, w)| w * cd_kernel(tab, x, *y) * cd_kernel(tab, *y, z))
            .sum();
        assert!((lhs - cd_kernel(tab, x, z)).abs() < 1e-9);
    }
}

#[test]
fn doubling_and_truncation_invariance() {
    let f = build_example_family();
    let cfg = PrecisionConfig::default_for(&f, 64, 0.0, 0.0).unwrap();
    let base = recurrence_table(&f, 64, 0.0, 0.0, &cfg).unwrap();
    assert!(base.validation_delta.unwrap() < 1e-12);

    let mut wide = cfg.with_digits(cfg.digits + 30);
    wide.truncation_margin = 80.0;
    wide.validate = false;
    let widened = recurrence_table(&f, 64, 0.0, 0.0, &wide).unwrap();
    assert!(widened.window.0 < base.window.0 && widened.window.1 > base.window.1);
    for k in 1..=64 {
        assert!((base.a_at(k) - widened.a_at(k)).abs() < 1e-12);
    }
    for k in 0..=64 {
        assert!((base.b_at(k) - widened.b_at(k)).abs() < 1e-12);
    }
}

#[test]
fn even_potential_has_vanishing_b() {
    let f = single(vec![0.0, 0.0, -0.5, 0.0, 0.25]);
    let tab = table(&f, 24, 0.0, 0.0);
    assert!(tab.b.iter().all(|b| b.abs() < 1e-13), "{:?}", tab.b);
}

#[test]
fn bulk_density_from_the_kernel() {
    let f = build_example_family();
    let eq = EquilibriumData::compute(&f, SupportInterval { a: -1.5, b: 1.5 }).unwrap();
    let rho = density(&eq, 0.0, 0.0, 0.0).unwrap();
    assert!((rho - 4.0 / (5.0 * PI)).abs() < 1e-14);
    let tab = table(&f, 64, 0.0, 0.0);
    let est = cd_kernel(&tab, 0.0, 0.0) / 64.0;
    assert!((est - rho).abs() < 2e-3, "{est} vs {rho}");
}

#[test]
fn rejects_bad_configurations() {
    let f = build_example_family();
    let cfg = PrecisionConfig::default_for(&f, 8, 0.0, 0.0).unwrap();
    assert!(recurrence_table(&f, 8, 0.0, 0.0, &cfg.with_digits(20)).is_err());
    assert!(recurrence_table(&f, 0, 0.0, 0.0, &cfg).is_err());
    let odd = single(vec![0.0, 0.0, 0.0, 1.0]);
    assert!(recurrence_table(&odd, 8, 0.0, 0.0, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(x in -2.2f64..2.2, y in -2.2f64..2.2) {
        let tab = example16();
        prop_assert_eq!(cd_kernel(tab, x, y), cd_kernel(tab, y, x));
    }

    #[test]
    fn kernel_diagonal_is_nonnegative(x in -3.0f64..3.0) {
        prop_assert!(cd_kernel(example16(), x, x) >= 0.0);
    }

    #[test]
    fn cauchy_schwarz(x in -2.2f64..2.2, y in -2.2f64..2.2) {
        let tab = example16();
        let k = cd_kernel(tab, x, y);
        let bound = (cd_kernel(tab, x, x) * cd_kernel(tab, y, y)).sqrt();
        prop_assert!(k.abs() <= bound * (1.0 + 1e-10) + 1e-14);
    }
}

#[test]
fn recurrence_coefficients_positive() {
    assert!(example16().a.iter().all(|&a| a > 0.0));
    assert!(example16().log_norms.iter().all(|l| l.is_finite()));
}
