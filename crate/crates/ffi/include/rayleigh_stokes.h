#ifndef RAYLEIGH_STOKES_H
#define RAYLEIGH_STOKES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes; 2–5 match the command-line exit codes.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  /*
   Invalid parameter, configuration or input data.
   */
  RS_STATUS_INVALID_INPUT = 2,
  /*
   Quadrature failure or no threshold time on the scan grid.
   */
  RS_STATUS_NUMERICAL_FAILURE = 3,
  /*
   The observation lies outside the attainable range.
   */
  RS_STATUS_NO_SOLUTION = 4,
  /*
   Monotonicity certificate failed or the observation time is below the threshold.
   */
  RS_STATUS_CERTIFICATE_FAILURE = 5,
  RS_STATUS_NULL_POINTER = 10,
  RS_STATUS_PANIC = 11,
} RsStatus;

/*
 Observation function `Φ`.
 */
typedef enum RsWeight {
  RS_WEIGHT_ONE = 0,
  RS_WEIGHT_LAMBDA = 1,
  /*
   `λ^p`, with `p` passed separately.
   */
  RS_WEIGHT_POWER = 2,
} RsWeight;

/*
 How [`rs_recover_alpha`] checks the observation time.
 */
typedef enum RsGate {
  /*
   Run the threshold scan with the given number of doublings.
   */
  RS_GATE_VERIFY = 0,
  /*
   Compare against a threshold time supplied by the caller.
   */
  RS_GATE_PRECOMPUTED = 1,
  /*
   No check; the result is marked uncertified.
   */
  RS_GATE_UNSAFE = 2,
} RsGate;

/*
 Opaque operator handle.
 */
typedef struct RsOperator RsOperator;

/*
 Quadrature tolerances; obtain defaults from [`rs_quadrature_default`].
 */
typedef struct RsQuadrature {
  double rel_tol;
  double abs_tol;
  size_t max_panels;
  size_t panel_order;
} RsQuadrature;

/*
 Five-term breakdown of `dB/dα`.
 */
typedef struct RsSensitivity {
  double near[5];
  double far[5];
  double c0;
  double split;
  double total;
  double fd_reference;
  bool cross_check_ok;
} RsSensitivity;

typedef struct RsRecovery {
  double alpha_hat;
  double residual;
  size_t iterations;
  /*
   Threshold time used by the gate; NaN when the check was skipped.
   */
  double t0_used;
  double u_min;
  double u_max;
  bool certified;
} RsRecovery;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *rs_version(void);

/*
 Copies the calling thread's last error message into `buf` (truncated, always
 NUL-terminated when `len > 0`) and returns the full message length excluding the NUL;
 0 when there is no error.

 # Safety
 `buf` must be NULL or valid for `len` bytes.
 */
size_t rs_last_error_message(char *buf, size_t len);

struct RsQuadrature rs_quadrature_default(void);

/*
 Dirichlet Laplacian on `(0, length)` with `modes` eigenpairs.

 # Safety
 `out` must be valid for one pointer write.
 */
enum RsStatus rs_operator_interval(double length, size_t modes, struct RsOperator **out);

/*
 Dirichlet Laplacian on `(0, lx) × (0, ly)`, the `modes` smallest eigenvalues.

 # Safety
 `out` must be valid for one pointer write.
 */
enum RsStatus rs_operator_rectangle(double lx, double ly, size_t modes, struct RsOperator **out);

/*
 Symmetric positive-definite `n × n` matrix, row-major.

 # Safety
 `entries` must be valid for `n * n` reads and `out` for one pointer write.
 */
enum RsStatus rs_operator_matrix(const double *entries, size_t n, struct RsOperator **out);

/*
 Releases an operator; NULL is ignored.

 # Safety
 `op` must be NULL or a handle from `rs_operator_*` that has not been freed.
 */
void rs_operator_free(struct RsOperator *op);

/*
 Number of retained modes; 0 for NULL.

 # Safety
 `op` must be NULL or a live handle.
 */
size_t rs_operator_len(const struct RsOperator *op);

/*
 Copies up to `len` eigenvalues into `out`.

 # Safety
 `op` must be a live handle and `out` valid for `len` writes.
 */
enum RsStatus rs_operator_eigenvalues(const struct RsOperator *op, double *out, size_t len);

/*
 `B_α(λ, t)`. `cfg` may be NULL for defaults.

 # Safety
 `cfg` must be NULL or readable; `out` valid for one write.
 */
enum RsStatus rs_kernel_eval(double lambda,
                             double gamma,
                             double alpha,
                             double t,
                             const struct RsQuadrature *cfg,
                             double *out);

/*
 `∂_t B_α(λ, t)` for `t > 0`.

 # Safety
 As [`rs_kernel_eval`].
 */
enum RsStatus rs_kernel_dbdt(double lambda,
                             double gamma,
                             double alpha,
                             double t,
                             const struct RsQuadrature *cfg,
                             double *out);

/*
 `∂_α B_α(λ, t0)` with its breakdown, `t0 ≥ 1`, `0 < lambda1 ≤ lambda`.

 # Safety
 `cfg` must be NULL or readable; `out` valid for one write.
 */
enum RsStatus rs_kernel_dbdalpha(double lambda,
                                 double gamma,
                                 double alpha,
                                 double t0,
                                 double lambda1,
                                 const struct RsQuadrature *cfg,
                                 struct RsSensitivity *out);

/*
 `U(t0, α) = ‖Φ(A)u(t0)‖²` for Fourier coefficients `coeffs[0..n]` (zero-padded).

 # Safety
 `op` must be a live handle, `coeffs` valid for `n` reads, `cfg` NULL or readable, `out`
 valid for one write.
 */
enum RsStatus rs_observation_u(const struct RsOperator *op,
                               const double *coeffs,
                               size_t n,
                               double alpha,
                               double gamma,
                               double t0,
                               enum RsWeight weight,
                               double power,
                               const struct RsQuadrature *cfg,
                               double *out);

/*
 Threshold time for the α-grid `alphas[0..n]` scanned on `start·2^k`, `k ≤ doublings`.

 # Safety
 `alphas` valid for `n` reads, `cfg` NULL or readable, `out` valid for one write.
 */
enum RsStatus rs_estimate_t0(double gamma,
                             double lambda1,
                             const double *alphas,
                             size_t n,
                             double start,
                             uint32_t doublings,
                             const struct RsQuadrature *cfg,
                             double *out);

/*
 Recovers `α` from `d0 = U(t0, α)` on the bracket `[lo, hi]`.

 `gate_value` is the number of scan doublings for [`RsGate::Verify`] and the threshold
 time for [`RsGate::Precomputed`]; it is ignored for [`RsGate::Unsafe`].

 # Safety
 `op` must be a live handle, `coeffs` valid for `n` reads, `cfg` NULL or readable, `out`
 valid for one write.
 */
enum RsStatus rs_recover_alpha(const struct RsOperator *op,
                               const double *coeffs,
                               size_t n,
                               double gamma,
                               enum RsWeight weight,
                               double power,
                               double t0,
                               double d0,
                               double lo,
                               double hi,
                               double alpha_tol,
                               double value_tol,
                               enum RsGate gate,
                               double gate_value,
                               const struct RsQuadrature *cfg,
                               struct RsRecovery *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAYLEIGH_STOKES_H */
