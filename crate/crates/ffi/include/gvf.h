#ifndef GVF_H
#define GVF_H

#pragma once

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum GvfStatus {
  GVF_STATUS_OK = 0,
  GVF_STATUS_NULL_POINTER = 1,
  GVF_STATUS_INVALID_ARGUMENT = 2,
  // The field is undefined at the queried point.
  GVF_STATUS_DEGENERATE = 3,
  // A scenario file failed to load, parse or validate.
  GVF_STATUS_CONFIG = 4,
  GVF_STATUS_IO = 5,
  GVF_STATUS_BUFFER_TOO_SMALL = 6,
  GVF_STATUS_PANIC = 7,
} GvfStatus;

typedef enum GvfTermination {
  GVF_TERMINATION_CONVERGED_TO_PATH = 0,
  GVF_TERMINATION_REACHED_CRITICAL_SET = 1,
  GVF_TERMINATION_TIMEOUT = 2,
  GVF_TERMINATION_LEFT_DOMAIN = 3,
  GVF_TERMINATION_GUIDANCE_INFEASIBLE = 4,
} GvfTermination;

// Opaque path handle.
typedef struct GvfPath GvfPath;

// Opaque GVF simulator handle: a path, gains and step settings.
typedef struct GvfSimulator GvfSimulator;

// Final state of one closed-loop run.
typedef struct GvfRunResult {
  enum GvfTermination termination;
  double t_final;
  double x;
  double y;
  double alpha;
  // Tracking error at the final sample.
  double e;
  // Distance to the path at the final sample.
  double distance;
  // Number of recorded samples.
  size_t samples;
} GvfRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *gvf_last_error_message(void);

// `k_s ((x - x0)^2 / p^2 + (y - y0)^2 / q^2 - r^2)`.
//
// # Safety
// `out` must be NULL or point to writable storage for one pointer.
enum GvfStatus gvf_path_new_ellipse(double x0,
                                    double y0,
                                    double r,
                                    double p,
                                    double q,
                                    double k_s,
                                    struct GvfPath **out);

// Cassini oval with foci `(x0 +- q, y0)`; requires `p > q`.
//
// # Safety
// `out` must be NULL or point to writable storage for one pointer.
enum GvfStatus gvf_path_new_cassini(double x0,
                                    double y0,
                                    double p,
                                    double q,
                                    double k_s,
                                    struct GvfPath **out);

// # Safety
// `out` must be NULL or point to writable storage for one pointer.
enum GvfStatus gvf_path_new_circle(double x0, double y0, double radius, struct GvfPath **out);

// `a x + b y + c`.
//
// # Safety
// `out` must be NULL or point to writable storage for one pointer.
enum GvfStatus gvf_path_new_line(double a, double b, double c, struct GvfPath **out);

// # Safety
// `path` must be NULL or a handle from `gvf_path_new_*` not yet freed.
void gvf_path_free(struct GvfPath *path);

// `phi`, gradient (2 values) and row-major Hessian (4 values) at `(x, y)`.
//
// # Safety
// `path` must be a live handle; `grad` and `hess` must be NULL or point to
// 2 and 4 writable doubles; `phi` must be NULL or writable.
enum GvfStatus gvf_path_eval(const struct GvfPath *path,
                             double x,
                             double y,
                             double *phi,
                             double *grad,
                             double *hess);

// Unit guiding direction at `(x, y)` with the identity error map.
// Returns [`GvfStatus::Degenerate`] at critical points.
//
// # Safety
// `path` must be a live handle and `m_d` must point to 2 writable doubles.
enum GvfStatus gvf_guiding_direction(const struct GvfPath *path,
                                     double k_n,
                                     double x,
                                     double y,
                                     double *m_d);

// Critical points inside the padded workspace, written as `x, y` pairs.
// `count` receives the number found even when `capacity` is too small.
//
// # Safety
// `path` must be a live handle, `xy` must be NULL or hold `2 * capacity`
// writable doubles, and `count` must be writable.
enum GvfStatus gvf_path_critical_points(const struct GvfPath *path,
                                        double *xy,
                                        size_t capacity,
                                        size_t *count);

// GVF closed-loop simulator on a copy of `path` with the default stop
// rules.
//
// # Safety
// `path` must be a live handle and `out` writable storage for one pointer.
enum GvfStatus gvf_simulator_new(const struct GvfPath *path,
                                 double k_n,
                                 double k_delta,
                                 double u_r,
                                 double dt,
                                 double t_max,
                                 struct GvfSimulator **out);

// # Safety
// `sim` must be NULL or a handle from [`gvf_simulator_new`] not yet freed.
void gvf_simulator_free(struct GvfSimulator *sim);

// Runs from `(x, y, alpha)` until a termination event.
//
// # Safety
// `sim` must be a live handle and `result` writable.
enum GvfStatus gvf_simulator_run(const struct GvfSimulator *sim,
                                 double x,
                                 double y,
                                 double alpha,
                                 struct GvfRunResult *result);

// Loads a scenario file and writes its trajectory CSVs and summary into
// `out_dir` (or the scenario's own output directory when NULL).
//
// # Safety
// `config_path` must be a NUL-terminated string; `out_dir` NULL or one.
enum GvfStatus gvf_run_scenario(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GVF_H */
