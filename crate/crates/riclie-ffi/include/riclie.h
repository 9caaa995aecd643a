/* C interface for the riclie Riccati-equation toolkit. */

#ifndef RICLIE_H
#define RICLIE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define RICLIE_OK 0

// A required pointer argument was null.
#define RICLIE_NULL_POINTER 1

// The input could not be used: syntax error, bad domain, non-unimodular
// matrix, NaN where a point of the line was expected.
#define RICLIE_INVALID_INPUT 2

// A numerical procedure failed: step-size underflow, quadrature stagnation,
// a reduction that did not survive verification.
#define RICLIE_NUMERICAL 3

// A string argument was not valid UTF-8.
#define RICLIE_BAD_UTF8 4

// An internal invariant was violated; the library caught a panic at the
// boundary instead of unwinding into the caller.
#define RICLIE_PANIC 5

// An equation `dy/dt = b0(t) + b1(t) y + b2(t) y^2` with its time domain.
// Opaque: create with [`riclie_eq_parse`], release with [`riclie_eq_free`].
typedef struct RiclieEquation RiclieEquation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The library version as a static string; do not free.
const char *riclie_version(void);

// A copy of the most recent error message on this thread, or null if no
// error has been recorded.  Release the copy with [`riclie_string_free`].
char *riclie_last_error(void);

// Release a string returned by this library.  Null is ignored.
//
// # Safety
// `s` must be null or a pointer previously returned by a `riclie_*`
// function and not yet freed.
void riclie_string_free(char *s);

// Parse an equation from three coefficient expressions over the domain
// `[t_lo, t_hi]`.  `params_json` is an optional JSON object of named
// constants (null means none).  On success writes a handle to `out`.
//
// # Safety
// `b0`, `b1`, `b2` must be NUL-terminated strings; `params_json` must be
// null or NUL-terminated; `out` must be valid for writes.
int32_t riclie_eq_parse(const char *b0,
                        const char *b1,
                        const char *b2,
                        const char *params_json,
                        double t_lo,
                        double t_hi,
                        struct RiclieEquation **out);

// Release an equation handle.  Null is ignored.
//
// # Safety
// `eq` must be null or a handle from this library that has not been freed.
void riclie_eq_free(struct RiclieEquation *eq);

// Write the equation's time domain to `t_lo` and `t_hi`.
//
// # Safety
// `eq` must be a live handle; `t_lo` and `t_hi` must be valid for writes.
int32_t riclie_eq_domain(const struct RiclieEquation *eq, double *t_lo, double *t_hi);

// Classify the equation and report the result as JSON: the case tag, the
// fitted evidence, and the reduction plan the solver would use (or null).
// `grid_points` of 0 and a non-positive `tol_const` select the defaults.
//
// # Safety
// `eq` must be a live handle; `out_json` must be valid for writes.
int32_t riclie_eq_classify_json(const struct RiclieEquation *eq,
                                uint32_t grid_points,
                                double tol_const,
                                char **out_json);

// Solve the initial-value problem `y(t0) = y0` over `[t0, t1]` at
// `n_samples` evenly spaced times and report the result as JSON with `t`,
// `y` (numbers, or the string `"inf"` at poles), `chart`, the method used,
// and the deviation from the numerical oracle.  Pass IEEE `INFINITY` as
// `y0` to start at the point at infinity; a non-positive `rtol` selects the
// default.
//
// # Safety
// `eq` must be a live handle; `out_json` must be valid for writes.
int32_t riclie_eq_solve_json(const struct RiclieEquation *eq,
                             double y0,
                             double t0,
                             double t1,
                             uint32_t n_samples,
                             double rtol,
                             char **out_json);

// Integrate the equation with the numerical oracle alone and return the
// trace as CSV (`t,y,chart`, with `inf` at poles).  Non-positive `rtol` or
// `atol` select the defaults.
//
// # Safety
// `eq` must be a live handle; `out_csv` must be valid for writes.
int32_t riclie_eq_oracle_csv(const struct RiclieEquation *eq,
                             double y0,
                             double t0,
                             double t1,
                             uint32_t n_samples,
                             double rtol,
                             double atol,
                             char **out_csv);

// Transform the equation through the constant unimodular matrix
// `[alpha, beta, gamma, delta]` (row-major) and write a new handle to
// `out`.  The matrix must have determinant 1.
//
// # Safety
// `eq` must be a live handle; `matrix` must point to 4 readable doubles;
// `out` must be valid for writes.
int32_t riclie_eq_transform_const(const struct RiclieEquation *eq,
                                  const double *matrix,
                                  struct RiclieEquation **out);

// Apply the Möbius action of the unimodular matrix
// `[alpha, beta, gamma, delta]` to the point `y` of the compactified line
// and write the image to `out_y`.  Pass IEEE `INFINITY` for the point at
// infinity; the image may likewise be `INFINITY`.
//
// # Safety
// `matrix` must point to 4 readable doubles; `out_y` must be valid for
// writes.
int32_t riclie_mobius(const double *matrix, double y, double *out_y);

// The upper incomplete gamma function Γ(a, t) for `t > 0`, computed by
// adaptive quadrature with a certified tail bound.
//
// # Safety
// `out` must be valid for writes.
int32_t riclie_upper_gamma(double a, double t, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RICLIE_H */
