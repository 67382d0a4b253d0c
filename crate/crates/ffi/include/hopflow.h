#ifndef HOPFLOW_H
#define HOPFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfDiffScheme {
  HF_DIFF_SCHEME_FINITE_DIFFERENCE = 0,
  HF_DIFF_SCHEME_FOURIER = 1,
} HfDiffScheme;

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_ARGUMENT = 2,
  HF_STATUS_NON_UNIT_INPUT = 3,
  HF_STATUS_TOO_COARSE = 4,
  HF_STATUS_DEGENERATE_CURVE = 5,
  HF_STATUS_NOT_EMBEDDED = 6,
  HF_STATUS_REGIME_VIOLATION = 7,
  HF_STATUS_STEP_FAILURE = 8,
  HF_STATUS_DEGENERATE_SURFACE = 9,
  HF_STATUS_IO = 10,
  HF_STATUS_PANIC = 11,
  HF_STATUS_INTERNAL = 12,
} HfStatus;

typedef enum HfTermination {
  HF_TERMINATION_GREAT_CIRCLE = 0,
  HF_TERMINATION_GRADIENT_VANISHED = 1,
  HF_TERMINATION_END_TIME = 2,
  HF_TERMINATION_MAX_STEPS = 3,
  HF_TERMINATION_SINGULARITY_SUSPECTED = 4,
} HfTermination;

typedef enum HfTimeScheme {
  HF_TIME_SCHEME_IMEX = 0,
  HF_TIME_SCHEME_EXPLICIT_RK4 = 1,
} HfTimeScheme;

typedef struct HfCurve HfCurve;

typedef struct HfTrajectory HfTrajectory;

typedef struct HfEnergy {
  double energy;
  double length;
  double total_curvature;
  double area;
  bool embedded;
  double sup_curvature;
  double gradient_l2;
  double dissipation;
} HfEnergy;

typedef struct HfModulus {
  double raw_re;
  double raw_im;
  double reduced_re;
  double reduced_im;
} HfModulus;

typedef struct HfTorus {
  double holonomy;
  double half_area;
  double holonomy_error;
  double fiber_residual;
  double horizontality_residual;
  double willmore;
  double pi_energy;
  /**
   * Largest relative residual over the pointwise surface identities.
   */
  double max_pointwise;
  double gradient_correspondence;
  double velocity_correspondence;
} HfTorus;

/**
 * Flow parameters; start from [`hf_flow_params_default`]. A non-positive `t_end`
 * or `sample_interval` means none.
 */
typedef struct HfFlowParams {
  enum HfTimeScheme scheme;
  enum HfDiffScheme diff;
  double dt;
  double dt_max;
  bool adaptive;
  double error_tol;
  size_t max_steps;
  double t_end;
  double sample_interval;
  size_t resample_every;
  bool expect_small_energy;
} HfFlowParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *hf_last_error(void);

/**
 * Builds a curve from `n` unit vectors stored as `xyz[3*i..3*i+3]`.
 *
 * # Safety
 * `xyz` must point to `3 * n` doubles and `out` must be writable.
 */
enum HfStatus hf_curve_new(const double *xyz, size_t n, bool reverse, struct HfCurve **out);

/**
 * Circle at polar angle `theta` with `n` nodes.
 *
 * # Safety
 * `out` must be writable.
 */
enum HfStatus hf_curve_latitude(size_t n, double theta, struct HfCurve **out);

/**
 * # Safety
 * `curve` must come from this library and not be used afterwards.
 */
void hf_curve_free(struct HfCurve *curve);

/**
 * Number of nodes, 0 for a null handle.
 *
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t hf_curve_len(const struct HfCurve *curve);

/**
 * Copies the nodes into `xyz`, which holds `capacity` doubles.
 *
 * # Safety
 * `curve` must be a live handle and `xyz` must point to `capacity` doubles.
 */
enum HfStatus hf_curve_nodes(const struct HfCurve *curve, double *xyz, size_t capacity);

/**
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum HfStatus hf_curve_energy(const struct HfCurve *curve,
                              enum HfDiffScheme scheme,
                              struct HfEnergy *out);

/**
 * Lattice modulus of the Hopf torus over an embedded curve.
 *
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum HfStatus hf_curve_modulus(const struct HfCurve *curve, struct HfModulus *out);

/**
 * Lifts an embedded curve to its Hopf torus with `fiber_res` fiber samples and
 * evaluates the surface identities.
 *
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum HfStatus hf_torus_check(const struct HfCurve *curve, size_t fiber_res, struct HfTorus *out);

struct HfFlowParams hf_flow_params_default(void);

/**
 * Runs the flow from `curve`. `params` may be null for the defaults.
 *
 * # Safety
 * `curve` must be a live handle, `params` null or valid, and `out` writable.
 */
enum HfStatus hf_flow_run(const struct HfCurve *curve,
                          const struct HfFlowParams *params,
                          struct HfTrajectory **out);

/**
 * # Safety
 * `traj` must come from this library and not be used afterwards.
 */
void hf_trajectory_free(struct HfTrajectory *traj);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t hf_trajectory_len(const struct HfTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum HfStatus hf_trajectory_termination(const struct HfTrajectory *traj, enum HfTermination *out);

/**
 * Time and energy of sample `index`.
 *
 * # Safety
 * `traj` must be a live handle; `t` and `energy` must be writable.
 */
enum HfStatus hf_trajectory_sample(const struct HfTrajectory *traj,
                                   size_t index,
                                   double *t,
                                   double *energy);

/**
 * Copy of the curve at sample `index`, released with [`hf_curve_free`].
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum HfStatus hf_trajectory_curve(const struct HfTrajectory *traj,
                                  size_t index,
                                  struct HfCurve **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOPFLOW_H */
