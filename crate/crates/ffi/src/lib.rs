//! C ABI over the edgecrit core.
//!
//! Every function returns an `i32` code (0 on success, negative on failure) and
//! writes results through out-pointers. Handles are opaque; free them with the
//! matching `*_free`. On failure `edgecrit_last_error()` describes what went wrong.
//!
//! ```c
//! EdgecritFamily *f = NULL;
//! EdgecritRecurrence *r = NULL;
//! double a;
//! if (edgecrit_family_example(&f) != EDGECRIT_OK) return 1;
//! if (edgecrit_recurrence_new(f, 64, 0.0, 0.0, 0, 1, &r) != EDGECRIT_OK) {
//!     fprintf(stderr, "%s\n", edgecrit_last_error());
//! }
//! edgecrit_recurrence_a(r, 64, &a);
//! edgecrit_recurrence_free(r);
//! edgecrit_family_free(f);
//! ```

mod error;

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use edgecrit::equilibrium::{constants, EquilibriumData, SupportInterval};
use edgecrit::harness::airy;
use edgecrit::lax::{LaxConfig, LaxSolver};
use edgecrit::orthopoly::{cd_kernel, recurrence_table, PrecisionConfig, RecurrenceTable};
use edgecrit::pi2::{eval_y, solve_y, PI2Solution};
use edgecrit::poly::Polynomial;
use edgecrit::potentials::{build_example_family, DeformedFamily};

pub use error::*;

/// Opaque deformation family V0 + s V1 + t V2.
pub struct EdgecritFamily {
    inner: DeformedFamily,
}

/// Opaque recurrence table for one (n, s, t).
pub struct EdgecritRecurrence {
    inner: RecurrenceTable,
}

/// Opaque P_I^2 solution at fixed t.
pub struct EdgecritPi2 {
    inner: PI2Solution,
}

fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    error::clear();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EDGECRIT_OK,
        Ok(Err(code)) => code,
        Err(_) => {
            error::set_error("panic inside edgecrit");
            EDGECRIT_ERR_PANIC
        }
    }
}

fn fail(e: edgecrit::Error) -> i32 {
    let code = error::code_for(&e);
    error::set_error(e.to_string());
    code
}

fn null(what: &str) -> i32 {
    error::set_error(format!("{what} is NULL"));
    EDGECRIT_ERR_NULL_POINTER
}

fn invalid(msg: String) -> i32 {
    error::set_error(msg);
    EDGECRIT_ERR_INVALID_ARGUMENT
}

/// # Safety
/// `p` must be NULL or valid for `len` reads.
unsafe fn coeffs<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], i32> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), i32> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

/// The worked example: V0 = x^4/20 - 4x^3/15 + x^2/5 + 8x/5, V1 = x, V2 = x^3 - 6x.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_family_example(out: *mut *mut EdgecritFamily) -> i32 {
    guard(|| {
        let h = Box::new(EdgecritFamily {
            inner: build_example_family(),
        });
        put(out, Box::into_raw(h), "out")
    })
}

/// Builds a family from ascending-degree coefficient arrays.
///
/// # Safety
/// Each array must hold its stated number of doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_family_new(
    v0: *const f64,
    len0: usize,
    v1: *const f64,
    len1: usize,
    v2: *const f64,
    len2: usize,
    out: *mut *mut EdgecritFamily,
) -> i32 {
    guard(|| {
        let p0 = Polynomial::new(coeffs(v0, len0, "v0")?.to_vec());
        let p1 = Polynomial::new(coeffs(v1, len1, "v1")?.to_vec());
        let p2 = Polynomial::new(coeffs(v2, len2, "v2")?.to_vec());
        let inner = DeformedFamily::new(p0, p1, p2).map_err(fail)?;
        put(out, Box::into_raw(Box::new(EdgecritFamily { inner })), "out")
    })
}

/// # Safety
/// `h` must be NULL or come from `edgecrit_family_*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_family_free(h: *mut EdgecritFamily) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Support [a, b] of the equilibrium measure of V0 and the constants c, c1, c2.
///
/// # Safety
/// `family` must be a live handle; every out-pointer must be valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_equilibrium(
    family: *const EdgecritFamily,
    guess_a: f64,
    guess_b: f64,
    a: *mut f64,
    b: *mut f64,
    c: *mut f64,
    c1: *mut f64,
    c2: *mut f64,
) -> i32 {
    guard(|| {
        let f = family.as_ref().ok_or_else(|| null("family"))?;
        let guess = SupportInterval::new(guess_a, guess_b).map_err(fail)?;
        let eq = EquilibriumData::compute(&f.inner, guess).map_err(fail)?;
        let k = constants(&eq).map_err(fail)?;
        put(a, eq.support.a, "a")?;
        put(b, eq.support.b, "b")?;
        put(c, k.c, "c")?;
        put(c1, k.c1, "c1")?;
        put(c2, k.c2, "c2")
    })
}

/// Recurrence coefficients for e^{-n V_{s,t}}. `digits` = 0 picks the default rule;
/// `validate` != 0 repeats the run at doubled precision and node count.
///
/// # Safety
/// `family` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_recurrence_new(
    family: *const EdgecritFamily,
    n: usize,
    s: f64,
    t: f64,
    digits: usize,
    validate: i32,
    out: *mut *mut EdgecritRecurrence,
) -> i32 {
    guard(|| {
        let f = family.as_ref().ok_or_else(|| null("family"))?;
        if n == 0 {
            return Err(invalid("n must be positive".into()));
        }
        let mut cfg = PrecisionConfig::default_for(&f.inner, n, s, t).map_err(fail)?;
        if digits != 0 {
            cfg = cfg.with_digits(digits);
        }
        cfg.validate = validate != 0;
        let inner = recurrence_table(&f.inner, n, s, t, &cfg).map_err(fail)?;
        put(out, Box::into_raw(Box::new(EdgecritRecurrence { inner })), "out")
    })
}

/// # Safety
/// `h` must be NULL or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_recurrence_free(h: *mut EdgecritRecurrence) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// a_k for 1 <= k <= n.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_recurrence_a(h: *const EdgecritRecurrence, k: usize, out: *mut f64) -> i32 {
    guard(|| {
        let r = h.as_ref().ok_or_else(|| null("table"))?;
        if k == 0 || k > r.inner.n {
            return Err(invalid(format!("k = {k} outside 1..={}", r.inner.n)));
        }
        put(out, r.inner.a_at(k), "out")
    })
}

/// b_k for 0 <= k <= n.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_recurrence_b(h: *const EdgecritRecurrence, k: usize, out: *mut f64) -> i32 {
    guard(|| {
        let r = h.as_ref().ok_or_else(|| null("table"))?;
        if k > r.inner.n {
            return Err(invalid(format!("k = {k} outside 0..={}", r.inner.n)));
        }
        put(out, r.inner.b_at(k), "out")
    })
}

/// Weighted Christoffel-Darboux kernel K_n(x, y).
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_recurrence_kernel(
    h: *const EdgecritRecurrence,
    x: f64,
    y: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let r = h.as_ref().ok_or_else(|| null("table"))?;
        put(out, cd_kernel(&r.inner, x, y), "out")
    })
}

/// Solves P_I^2 at fixed `t` on [-l, l] with the given mesh.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_pi2_solve(t: f64, l: f64, mesh: f64, out: *mut *mut EdgecritPi2) -> i32 {
    guard(|| {
        if !(mesh > 0.0) || !(l > 0.0) {
            return Err(invalid(format!("need l > 0 and mesh > 0, got {l}, {mesh}")));
        }
        let points = (2.0 * l / mesh).round() as usize + 1;
        let inner = solve_y(t, l, points, 1e-10).map_err(fail)?;
        put(out, Box::into_raw(Box::new(EdgecritPi2 { inner })), "out")
    })
}

/// # Safety
/// `h` must be NULL or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_pi2_free(h: *mut EdgecritPi2) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// y(s) at the solution's t.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_pi2_eval(h: *const EdgecritPi2, s: f64, out: *mut f64) -> i32 {
    guard(|| {
        let p = h.as_ref().ok_or_else(|| null("solution"))?;
        let j = eval_y(&p.inner, s).map_err(fail)?;
        put(out, j.y, "out")
    })
}

/// Limiting critical-edge kernel K(u, v; s0, t) with t taken from the solution.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_crit_kernel(h: *const EdgecritPi2, s0: f64, u: f64, v: f64, out: *mut f64) -> i32 {
    guard(|| {
        let p = h.as_ref().ok_or_else(|| null("solution"))?;
        let lax = LaxSolver::new(s0, p.inner.t, &p.inner, LaxConfig::default()).map_err(fail)?;
        let k = lax.kernel(u, v).map_err(fail)?;
        put(out, k.k, "out")
    })
}

/// Ai(x) and Ai'(x) for |x| <= 12.
///
/// # Safety
/// Both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn edgecrit_airy(x: f64, ai: *mut f64, ai_prime: *mut f64) -> i32 {
    guard(|| {
        let v = airy(x).map_err(fail)?;
        put(ai, v.ai, "ai")?;
        put(ai_prime, v.ai_prime, "ai_prime")
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edgecrit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
