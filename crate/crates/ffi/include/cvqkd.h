#ifndef CVQKD_H
#define CVQKD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CvqkdStatus {
  CVQKD_STATUS_OK = 0,
  CVQKD_STATUS_NULL_POINTER = 1,
  CVQKD_STATUS_DOMAIN = 2,
  CVQKD_STATUS_INSUFFICIENT_DATA = 3,
  CVQKD_STATUS_UNCERTAINTY_VIOLATION = 4,
  CVQKD_STATUS_STATE = 5,
  CVQKD_STATUS_INCONSISTENT = 6,
  CVQKD_STATUS_IO = 7,
  CVQKD_STATUS_INVALID_STRING = 8,
  CVQKD_STATUS_PANIC = 9,
} CvqkdStatus;

// Eve's measurement on the two kept clones.
typedef enum CvqkdStrategy {
  // Beam splitter, then heterodyne of both ports.
  CVQKD_STRATEGY_BS_COMBINE = 0,
  // Heterodyne of each clone.
  CVQKD_STRATEGY_DIRECT_HETERODYNE = 1,
} CvqkdStrategy;

// Opaque simulation result.
typedef struct CvqkdSession CvqkdSession;

// Closed-form security figures for one `(Σ², ω²)` point.
typedef struct CvqkdReport {
  double signal_var;
  double omega_sq;
  double sigma_ch_sq;
  double sigma_b_sq;
  double sigma_e_sq;
  double gamma_ab;
  double gamma_ae;
  double i_ab;
  double i_ae;
  double key_rate_gap;
  bool secure;
  double threshold_sigma_ch_sq;
  double one_way_threshold;
} CvqkdReport;

// Simulation parameters. Fill with [`cvqkd_sim_config_default`] first.
typedef struct CvqkdSimConfig {
  uint64_t rounds;
  double signal_var;
  double reference_var;
  double omega_sq;
  double off_probability;
  uint64_t seed;
  // Worker threads; 0 is treated as 1.
  size_t workers;
  enum CvqkdStrategy strategy;
  // Power transmissivity of Eve's beam splitter.
  double transmissivity;
  // Replace the attack by a plain channel with the two noises below.
  bool no_attack;
  double forward_noise;
  double backward_noise;
} CvqkdSimConfig;

// Statistics measured on a finished session. Fields guarded by a `has_`
// flag are meaningful only when the flag is set.
typedef struct CvqkdEmpirical {
  uint64_t on_rounds;
  uint64_t off_rounds;
  double sigma_b_sq;
  double i_ab;
  bool has_eve;
  double sigma_e_sq;
  double i_ae;
  double key_rate_gap;
  bool has_noise;
  double forward_noise;
  double backward_noise;
  double total_noise;
} CvqkdEmpirical;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cvqkd_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// always NUL-terminated when `len > 0`). Returns the full message length
// without the terminator, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t cvqkd_last_error_message(char *buf, size_t len);

// Bob's per-quadrature estimation noise `σ_B²` under the attack.
//
// # Safety
// `out` must be null or valid for writes.
enum CvqkdStatus cvqkd_sigma_b_sq(double omega_sq, double *out);

// Eve's per-quadrature estimation noise `σ_E²` under the attack.
//
// # Safety
// `out` must be null or valid for writes.
enum CvqkdStatus cvqkd_sigma_e_sq(double omega_sq, double *out);

// Closed-form security threshold: channel noise `(3 + √5)/4` and the
// matching `ω² = (1 + √5)/4`.
//
// # Safety
// Both pointers must be null or valid for writes.
enum CvqkdStatus cvqkd_threshold_closed_form(double *sigma_ch_sq, double *omega_sq);

// Threshold channel noise found by bisection to `tolerance` in `ω²`.
//
// # Safety
// `out` must be null or valid for writes.
enum CvqkdStatus cvqkd_threshold_numeric(double tolerance, double *out);

// Fills a [`CvqkdReport`] for modulation variance `signal_var` and attack
// noise `omega_sq`.
//
// # Safety
// `out` must be null or valid for writes.
enum CvqkdStatus cvqkd_build_report(double signal_var, double omega_sq, struct CvqkdReport *out);

// Smallest symplectic eigenvalue of the partial transpose of a two-mode
// covariance matrix given as 16 row-major values in `(x₁, p₁, x₂, p₂)`
// order.
//
// # Safety
// `cov` must point to 16 readable doubles; `out` must be valid for writes.
enum CvqkdStatus cvqkd_pt_min_symplectic_eigenvalue(const double *cov, double *out);

// Writes the 16 row-major entries of the cloner's two-output covariance
// matrix for cloning noise `sigma_sq`.
//
// # Safety
// `out` must point to 16 writable doubles.
enum CvqkdStatus cvqkd_cloner_covariance(double sigma_sq, double *out);

// Writes the default simulation parameters into `out`.
//
// # Safety
// `out` must be null or valid for writes.
enum CvqkdStatus cvqkd_sim_config_default(struct CvqkdSimConfig *out);

// Runs a full session and stores the handle in `*out`.
//
// # Safety
// `config` must point to a valid [`CvqkdSimConfig`]; `out` must be valid
// for writes. The handle must be released with [`cvqkd_session_free`].
enum CvqkdStatus cvqkd_session_run(const struct CvqkdSimConfig *config, struct CvqkdSession **out);

// Releases a session. Null is ignored.
//
// # Safety
// `session` must be null or a handle from [`cvqkd_session_run`] that has
// not been freed.
void cvqkd_session_free(struct CvqkdSession *session);

// Number of ON and OFF rounds.
//
// # Safety
// `session` must be a live handle; the out-pointers must be valid for
// writes.
enum CvqkdStatus cvqkd_session_counts(const struct CvqkdSession *session,
                                      uint64_t *on,
                                      uint64_t *off);

// Forward, backward and total channel noise estimated from OFF rounds.
//
// # Safety
// `session` must be a live handle; the out-pointers must be valid for
// writes.
enum CvqkdStatus cvqkd_session_noise(const struct CvqkdSession *session,
                                     double *forward,
                                     double *backward,
                                     double *total);

// Measured variances and mutual informations.
//
// # Safety
// `session` must be a live handle; `out` must be valid for writes.
enum CvqkdStatus cvqkd_session_empirical(const struct CvqkdSession *session,
                                         struct CvqkdEmpirical *out);

// Writes the per-round transcript as CSV to `path` (UTF-8).
//
// # Safety
// `session` must be a live handle; `path` must be a NUL-terminated string.
enum CvqkdStatus cvqkd_session_write_csv(const struct CvqkdSession *session, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVQKD_H */
