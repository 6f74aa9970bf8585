#ifndef EDGECRIT_H
#define EDGECRIT_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define EDGECRIT_OK 0

#define EDGECRIT_ERR_NULL_POINTER -1

#define EDGECRIT_ERR_INVALID_ARGUMENT -2

#define EDGECRIT_ERR_COMPUTATION -3

#define EDGECRIT_ERR_PRECISION -4

#define EDGECRIT_ERR_PANIC -5

/**
 * Opaque deformation family V0 + s V1 + t V2.
 */
typedef struct EdgecritFamily EdgecritFamily;

/**
 * Opaque P_I^2 solution at fixed t.
 */
typedef struct EdgecritPi2 EdgecritPi2;

/**
 * Opaque recurrence table for one (n, s, t).
 */
typedef struct EdgecritRecurrence EdgecritRecurrence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The worked example: V0 = x^4/20 - 4x^3/15 + x^2/5 + 8x/5, V1 = x, V2 = x^3 - 6x.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t edgecrit_family_example(struct EdgecritFamily **out);

/**
 * Builds a family from ascending-degree coefficient arrays.
 *
 * # Safety
 * Each array must hold its stated number of doubles; `out` must be valid.
 */
int32_t edgecrit_family_new(const double *v0,
                            size_t len0,
                            const double *v1,
                            size_t len1,
                            const double *v2,
                            size_t len2,
                            struct EdgecritFamily **out);

/**
 * # Safety
 * `h` must be NULL or come from `edgecrit_family_*` and not be freed twice.
 */
void edgecrit_family_free(struct EdgecritFamily *h);

/**
 * Support [a, b] of the equilibrium measure of V0 and the constants c, c1, c2.
 *
 * # Safety
 * `family` must be a live handle; every out-pointer must be valid.
 */
int32_t edgecrit_equilibrium(const struct EdgecritFamily *family,
                             double guess_a,
                             double guess_b,
                             double *a,
                             double *b,
                             double *c,
                             double *c1,
                             double *c2);

/**
 * Recurrence coefficients for e^{-n V_{s,t}}. `digits` = 0 picks the default rule;
 * `validate` != 0 repeats the run at doubled precision and node count.
 *
 * # Safety
 * `family` must be a live handle and `out` valid.
 */
int32_t edgecrit_recurrence_new(const struct EdgecritFamily *family,
                                size_t n,
                                double s,
                                double t,
                                size_t digits,
                                int32_t validate,
                                struct EdgecritRecurrence **out);

/**
 * # Safety
 * `h` must be NULL or a live handle, freed once.
 */
void edgecrit_recurrence_free(struct EdgecritRecurrence *h);

/**
 * a_k for 1 <= k <= n.
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
int32_t edgecrit_recurrence_a(const struct EdgecritRecurrence *h, size_t k, double *out);

/**
 * b_k for 0 <= k <= n.
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
int32_t edgecrit_recurrence_b(const struct EdgecritRecurrence *h, size_t k, double *out);

/**
 * Weighted Christoffel-Darboux kernel K_n(x, y).
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
int32_t edgecrit_recurrence_kernel(const struct EdgecritRecurrence *h,
                                   double x,
                                   double y,
                                   double *out);

/**
 * Solves P_I^2 at fixed `t` on [-l, l] with the given mesh.
 *
 * # Safety
 * `out` must be valid.
 */
int32_t edgecrit_pi2_solve(double t, double l, double mesh, struct EdgecritPi2 **out);

/**
 * # Safety
 * `h` must be NULL or a live handle, freed once.
 */
void edgecrit_pi2_free(struct EdgecritPi2 *h);

/**
 * y(s) at the solution's t.
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
int32_t edgecrit_pi2_eval(const struct EdgecritPi2 *h, double s, double *out);

/**
 * Limiting critical-edge kernel K(u, v; s0, t) with t taken from the solution.
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
int32_t edgecrit_crit_kernel(const struct EdgecritPi2 *h,
                             double s0,
                             double u,
                             double v,
                             double *out);

/**
 * Ai(x) and Ai'(x) for |x| <= 12.
 *
 * # Safety
 * Both out-pointers must be valid.
 */
int32_t edgecrit_airy(double x, double *ai, double *ai_prime);

/**
 * Library version as a static NUL-terminated string.
 */
const char *edgecrit_version(void);

/**
 * Message for the most recent failure on this thread, or NULL.
 *
 * The pointer stays valid until the next edgecrit call on the same thread.
 */
const char *edgecrit_last_error(void);

void edgecrit_clear_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGECRIT_H */
