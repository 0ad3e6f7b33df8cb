#ifndef CONVEX_MIXING_H
#define CONVEX_MIXING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmDetection {
  CM_DETECTION_BRIDGE = 0,
  CM_DETECTION_ENDPOINT = 1,
} CmDetection;

typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_ARGUMENT = 2,
  CM_STATUS_DOMAIN_SPEC = 3,
  CM_STATUS_DIMENSION_MISMATCH = 4,
  CM_STATUS_NUMERICAL = 5,
  CM_STATUS_PANIC = 6,
} CmStatus;

/**
 * Opaque convex body.
 */
typedef struct CmBody CmBody;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cm_last_error_message(char *buf, size_t len);

/**
 * Builds a body from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum CmStatus cm_body_from_json(const char *json, struct CmBody **out);

/**
 * # Safety
 * `body` must be null or a handle from [`cm_body_from_json`] not yet freed.
 */
void cm_body_free(struct CmBody *body);

/**
 * Ambient dimension, or 0 for a null handle.
 *
 * # Safety
 * `body` must be null or a live handle.
 */
size_t cm_body_dimension(const struct CmBody *body);

/**
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum CmStatus cm_body_diameter(const struct CmBody *body, double *out);

/**
 * # Safety
 * `p` must point to `len` doubles; `out` must be writable.
 */
enum CmStatus cm_body_contains(const struct CmBody *body, const double *p, size_t len, bool *out);

/**
 * Euclidean projection of `p` onto the body, written to `out` (`len` doubles).
 *
 * # Safety
 * `p` and `out` must each point to `len` doubles.
 */
enum CmStatus cm_body_project(const struct CmBody *body, const double *p, size_t len, double *out);

/**
 * `P(BM from k stays in (-d, d) up to time t)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_survival_f(double d, double t, double k, double tol, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_chernoff_bound(double d, double t, double k, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_matthews_bound(double d, double t, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_bebendorf_envelope(double d, double t, double c, double *out);

/**
 * TV bound between laws started at two points `dist` apart.
 *
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_tv_bound_pair(double d, double t, double dist, double tol, double *out);

/**
 * Exact TV to uniform for reflected BM on `[0, d]` started at `x`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CmStatus cm_exact_tv_1d(double d, double t, double x, double *out);

/**
 * Runs `replicates` mirror couplings from `x` and `y` (each `len` doubles)
 * with the default threshold `0.5·√h`. Writes coupling or censoring times to
 * `taus` and a 0/1 censoring flag to `censored`, one per replicate.
 *
 * # Safety
 * `x`, `y` must point to `len` doubles; `taus`, `censored` to `replicates`
 * elements.
 */
enum CmStatus cm_simulate_coupling(const struct CmBody *body,
                                   const double *x,
                                   const double *y,
                                   size_t len,
                                   double h,
                                   double t_max,
                                   enum CmDetection detection,
                                   size_t replicates,
                                   uint64_t seed,
                                   double *taus,
                                   uint8_t *censored);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONVEX_MIXING_H */
