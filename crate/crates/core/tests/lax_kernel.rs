use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use edgecrit::lax::{
    calibrate_h, calibrate_h_probe, theta, zero_curvature_from_jet, zero_curvature_residual, LaxConfig, LaxMatrixU,
    LaxMatrixW, LaxSolver,
};
use edgecrit::pi2::{eval_y, solve_y, PI2Solution, YJet};
use edgecrit::verify::ds_identity_defect;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAIRS: [(f64, f64); 3] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];

fn sol(t: f64) -> &'static PI2Solution {
    static T0: OnceLock<PI2Solution> = OnceLock::new();
    static T1: OnceLock<PI2Solution> = OnceLock::new();
    let cell = if t == 0.0 { &T0 } else { &T1 };
    // t = 1 needs the quarter mesh; see the jet-consistency test.
    let points = if t == 0.0 { 4001 } else { 16001 };
    cell.get_or_init(|| solve_y(t, 40.0, points, 1e-10).unwrap())
}

fn solver(s0: f64, t0: f64) -> LaxSolver {
    LaxSolver::new(s0, t0, sol(t0), LaxConfig::default()).unwrap()
}

#[test]
fn reality_and_wronskian() {
    for (s0, t0) in PAIRS {
        let started = Instant::now();
        let lax = solver(s0, t0);
        let us: Vec<f64> = (0..=48).map(|k| -8.0 + 0.25 * k as f64).collect();
        let worst = lax
            .phi_many(&us)
            .unwrap()
            .iter()
            .map(|p| p.reality_defect())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "({s0}, {t0}): reality defect {worst}");
        let drift = lax.wronskian_drift(48).unwrap();
        assert!(drift < 1e-9, "({s0}, {t0}): Wronskian drift {drift}");
        assert!(started.elapsed().as_secs_f64() < 120.0);
    }
}

#[test]
fn zero_curvature_at_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (s0, t0) in PAIRS {
        for _ in 0..10 {
            let zeta = C::new(rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0));
            let s = s0 + rng.gen_range(-2.0..2.0);
            let r = zero_curvature_residual(zeta, s, t0, sol(t0)).unwrap();
            assert!(r < 1e-7, "({s0}, {t0}) at zeta = {zeta}, s = {s}: {r}");
        }
    }
}

#[test]
fn s_derivative_identity() {
    let pts = [(-2.0, 0.5), (-1.0, -1.0), (0.5, 1.5), (-3.0, 2.0)];
    for (s0, t0) in PAIRS {
        let d = ds_identity_defect(sol(t0), s0, t0, LaxConfig::default(), &pts).unwrap();
        assert!(d < 1e-5, "({s0}, {t0}): {d}");
    }
}

#[test]
fn jet_is_self_consistent() {
    // Fourth-order differences of each stored derivative against the next one.
    for t in [0.0, 1.0] {
        let sol = sol(t);
        let d = 2e-3;
        for s in [-5.0, -2.0, 0.0, 3.0] {
            let j: Vec<_> = (-2..=2).map(|k| eval_y(sol, s + k as f64 * d).unwrap()).collect();
            let fd = |f: &dyn Fn(&edgecrit::pi2::YJet) -> f64| {
                (f(&j[0]) - 8.0 * f(&j[1]) + 8.0 * f(&j[3]) - f(&j[4])) / (12.0 * d)
            };
            let mid = &j[2];
            assert!((fd(&|x| x.y) - mid.ys).abs() < 1e-7, "t = {t}, s = {s}");
            assert!((fd(&|x| x.ys) - mid.yss).abs() < 1e-6, "t = {t}, s = {s}");
            assert!((fd(&|x| x.yss) - mid.ysss).abs() < 1e-5, "t = {t}, s = {s}");
        }
    }
}

#[test]
fn kernel_structure_on_grid() {
    let grid: Vec<f64> = (0..9).map(|k| -4.0 + k as f64).collect();
    for (s0, t0) in PAIRS {
        let lax = solver(s0, t0);
        let kg = lax.kernel_grid(&grid, &grid).unwrap();
        for i in 0..9 {
            assert!(kg[i][i].k >= -1e-8, "diagonal {}", kg[i][i].k);
            for j in 0..9 {
                assert_eq!(kg[i][j].k, kg[j][i].k);
                assert!(kg[i][j].imag.abs() < 1e-8);
            }
        }
    }
}

#[test]
fn diagonal_form_continues_the_quotient() {
    let lax = solver(0.0, 0.0);
    for u in [-3.0, -0.7, 1.2] {
        let diag = lax.kernel(u, u).unwrap().k;
        let near = lax.kernel(u, u + 5e-3).unwrap().k;
        let far = lax.kernel(u - 5e-3, u + 5e-3).unwrap().k;
        // Central difference of a smooth symmetric function: O(h^2).
        assert!((diag - far).abs() < 1e-4 * (1.0 + diag.abs()), "{diag} vs {far}");
        assert!((diag - near).abs() < 1e-2 * (1.0 + diag.abs()));
    }
}

#[test]
fn kernel_decays_into_the_gap() {
    let lax = solver(0.0, 0.0);
    let d: Vec<f64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&u| lax.kernel(u, u).unwrap().k).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(lax.kernel(-4.0, -4.0).unwrap().k > 0.1);
}

#[test]
fn theta_rejects_the_cut() {
    assert!(theta(C::new(-1.0, 0.0), 0.0, 0.0).is_err());
    let z = C::new(4.0, 0.0);
    let th = theta(z, 1.0, 0.5).unwrap();
    let want = 2f64.powi(7) / 105.0 - 0.5 * 8.0 / 3.0 + 2.0;
    assert!((th.re - want).abs() < 1e-13 && th.im == 0.0);
}

#[test]
fn two_paths_agree() {
    for (s0, t0) in PAIRS {
        let lax = solver(s0, t0);
        for u in [-6.0, -2.0, 0.0, 2.5] {
            let d = lax.path_defect(u).unwrap();
            assert!(d < 1e-8, "({s0}, {t0}) at u = {u}: {d}");
        }
    }
}

#[test]
fn large_zeta_matches_the_leading_asymptotics() {
    let cfg = LaxConfig { window: (-8.0, 40.0), ..LaxConfig::default() };
    let lax = LaxSolver::new(0.0, 0.0, sol(0.0), cfg).unwrap();
    let u = 30.0;
    let p = lax.phi(u).unwrap();
    let th = theta(C::new(u, 0.0), 0.0, 0.0).unwrap().re;
    let lhs = p.phi1 * (2f64.sqrt() * u.powf(0.25) * (th + p.log_scale).exp()) * C::from_polar(1.0, PI / 4.0);
    assert!((lhs - 1.0).norm() < 2.0 / u.sqrt(), "{lhs}");
}

#[test]
fn calibration_of_h() {
    let cal = calibrate_h(0.0, 0.0, sol(0.0), LaxConfig::default()).unwrap();
    assert!(
        cal.discrepancy_after * 10.0 <= cal.discrepancy_before,
        "{} -> {}",
        cal.discrepancy_before,
        cal.discrepancy_after
    );
    let other = calibrate_h_probe(0.0, 0.0, sol(0.0), LaxConfig::default(), -2.0).unwrap();
    assert!((cal.extracted.0 - other.extracted.0).abs() < 1e-3, "{:?} vs {:?}", cal.extracted, other.extracted);
    let d = 1e-3;
    let hp = calibrate_h(d, 0.0, sol(0.0), LaxConfig::default()).unwrap().h;
    let hm = calibrate_h(-d, 0.0, sol(0.0), LaxConfig::default()).unwrap().h;
    let y = eval_y(sol(0.0), 0.0).unwrap().y;
    assert!(((hp - hm) / (2.0 * d) + y).abs() < 1e-4, "dh/ds = {}, y = {y}", (hp - hm) / (2.0 * d));
}

#[test]
fn zero_curvature_rejects_a_non_solution() {
    // y = sin s with exact derivatives does not solve the equation.
    let s: f64 = 0.3;
    let jet = YJet { y: s.sin(), ys: s.cos(), yss: -s.sin(), ysss: -s.cos(), yssss: s.sin() };
    let r = zero_curvature_from_jet(C::new(1.0, 1.0), s, 0.0, &jet);
    assert!(r > 0.1, "{r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_curvature_scaled_by_degree(r in 0.0f64..10.0, arg in 0.0f64..(2.0 * PI), s in -3.0f64..3.0) {
        let zeta = C::from_polar(r, arg);
        let res = zero_curvature_residual(zeta, s, 0.0, sol(0.0)).unwrap();
        prop_assert!(res / (1.0 + r.powi(3)) < 1e-7, "{}", res);
    }

    #[test]
    fn lax_matrices_are_traceless(
        y in -3.0f64..3.0, ys in -3.0f64..3.0, yss in -3.0f64..3.0, ysss in -3.0f64..3.0,
        s in -5.0f64..5.0, t in -2.0f64..2.0, zr in -4.0f64..4.0, zi in -4.0f64..4.0,
    ) {
        let jet = YJet { y, ys, yss, ysss, yssss: 0.0 };
        let z = C::new(zr, zi);
        prop_assert_eq!(LaxMatrixU::new(&jet, s, t).trace(z), C::new(0.0, 0.0));
        let w = LaxMatrixW { y }.eval(z);
        prop_assert_eq!(w[0][0] + w[1][1], C::new(0.0, 0.0));
    }

    #[test]
    fn theta_derivative(zr in 0.5f64..6.0, zi in -2.0f64..2.0, s in -3.0f64..3.0, t in -2.0f64..2.0) {
        // d theta / d zeta = zeta^{5/2}/30 - t zeta^{1/2}/2 + s zeta^{-1/2}/2.
        let z = C::new(zr, zi);
        let h = 1e-5;
        let fd = (theta(z + h, s, t).unwrap() - theta(z - h, s, t).unwrap()) / (2.0 * h);
        let r = z.sqrt();
        let exact = r.powi(5) / 30.0 - t * r / 2.0 + s / (2.0 * r);
        prop_assert!((fd - exact).norm() < 1e-6 * (1.0 + exact.norm()));
    }

    #[test]
    fn kernel_symmetric_off_grid(u in -6.0f64..3.0, v in -6.0f64..3.0) {
        static LAX: OnceLock<LaxSolver> = OnceLock::new();
        let lax = LAX.get_or_init(|| solver(0.0, 0.0));
        let a = lax.kernel(u, v).unwrap();
        let b = lax.kernel(v, u).unwrap();
        prop_assert_eq!(a.k, b.k);
        prop_assert!(a.imag.abs() <= 10.0 * a.est_error.max(1e-12 * a.k.abs()));
    }
}
