#ifndef OSCITIME_H
#define OSCITIME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OtDomainKind {
  // `sum c_n = 0`
  OT_DOMAIN_KIND_SUM_ZERO = 0,
  // `sum conj(omega)^n c_{l + m n} = 0` for every `l < m`
  OT_DOMAIN_KIND_RESIDUE_CLASS_ZERO = 1,
  // `c_n = 0` for `n > param`
  OT_DOMAIN_KIND_SUPPORT_BOUND = 2,
} OtDomainKind;

typedef enum OtStatus {
  OT_STATUS_OK = 0,
  OT_STATUS_NULL_POINTER = 1,
  OT_STATUS_INVALID_ARGUMENT = 2,
  OT_STATUS_DOMAIN = 3,
  OT_STATUS_DIVERGENT = 4,
  OT_STATUS_GUARD = 5,
  OT_STATUS_CONTOUR = 6,
  OT_STATUS_IO = 7,
  OT_STATUS_PANIC = 8,
} OtStatus;

typedef enum OtVerdict {
  OT_VERDICT_PASS = 0,
  OT_VERDICT_FAIL = 1,
  OT_VERDICT_INCONCLUSIVE = 2,
} OtVerdict;

// An operator that can be applied to vectors: banded, or a logarithm
// evaluated as a series.
typedef struct OtOperator OtOperator;

// A truncated Fock space vector.
typedef struct OtVector OtVector;

typedef struct OtCcrResult {
  double residual;
  double budget;
  enum OtVerdict verdict;
} OtCcrResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *ot_last_error(void);

// Library version as a static nul-terminated string.
const char *ot_version(void);

// Vector from `len` coefficients with no tail beyond them.
//
// # Safety
// `re` and `im` must point to `len` readable doubles; `out` must be writable.
enum OtStatus ot_vector_new(const double *re, const double *im, size_t len, struct OtVector **out);

// # Safety
// `out` must be writable.
enum OtStatus ot_vector_basis(size_t n, size_t dim, struct OtVector **out);

// `(alpha^n)`, truncated to `dim`.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_vector_geometric(double alpha_re,
                                  double alpha_im,
                                  size_t dim,
                                  struct OtVector **out);

// `a*^j exp(beta a*^2 / 2) Omega`; `dim = 0` picks the truncation
// automatically.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_vector_super_coherent(double beta_re,
                                       double beta_im,
                                       size_t j,
                                       size_t dim,
                                       struct OtVector **out);

// Seeded random vector satisfying a domain constraint. `omega` and `param`
// are read by `ResidueClassZero` (`param = m`) and `SupportBound`
// (`param = n_max`).
//
// # Safety
// `out` must be writable.
enum OtStatus ot_vector_domain_sample(enum OtDomainKind kind,
                                      double omega_re,
                                      double omega_im,
                                      size_t param,
                                      uint64_t seed,
                                      size_t dim,
                                      struct OtVector **out);

// # Safety
// `v` must be a live handle and `out` writable.
enum OtStatus ot_vector_dim(const struct OtVector *v, size_t *out);

// # Safety
// `v` must be a live handle and `out` writable.
enum OtStatus ot_vector_norm(const struct OtVector *v, double *out);

// Copies the coefficients (rounded to double) into `re`/`im`, which hold
// `len` entries; `len` must equal the vector dimension.
//
// # Safety
// `v` must be a live handle; `re` and `im` must point to `len` writable doubles.
enum OtStatus ot_vector_coeffs(const struct OtVector *v, double *re, double *im, size_t len);

// # Safety
// `v` must be null or a handle not yet freed.
void ot_vector_free(struct OtVector *v);

// Galapon's operator `i/(n - m)` on dimension `dim`.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_operator_galapon(size_t dim, struct OtOperator **out);

// The bounded boundary-family operator for `|omega| = 1`.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_operator_boundary(double omega_re,
                                   double omega_im,
                                   size_t m,
                                   size_t dim,
                                   struct OtOperator **out);

// `(i/m) log(omega - L^m)` for `|omega| <= 1`, applied as a series.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_operator_time(double omega_re,
                               double omega_im,
                               size_t m,
                               size_t dim,
                               struct OtOperator **out);

// `(i/2) log S` for the even (`odd = 0`) or odd angle operator.
//
// # Safety
// `out` must be writable.
enum OtStatus ot_operator_angle(bool odd, size_t dim, struct OtOperator **out);

// `out = op v`, with the error budget of the truncation in `budget`.
//
// # Safety
// `op` and `v` must be live handles; `out` and `budget` writable (`budget`
// may be null).
enum OtStatus ot_operator_apply(const struct OtOperator *op,
                                const struct OtVector *v,
                                struct OtVector **out,
                                double *budget);

// Largest singular value of a banded operator's truncation.
//
// # Safety
// `op` must be a live handle and `out` writable.
enum OtStatus ot_operator_norm(const struct OtOperator *op, double *out);

// # Safety
// `op` must be null or a handle not yet freed.
void ot_operator_free(struct OtOperator *op);

// Checks `[N, T] phi = expected phi` within `tol` plus the truncation budget.
//
// # Safety
// `op` and `phi` must be live handles and `out` writable.
enum OtStatus ot_ccr_check(const struct OtOperator *op,
                           const struct OtVector *phi,
                           double expected_re,
                           double expected_im,
                           double tol,
                           struct OtCcrResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSCITIME_H */
