/* C interface for the autosc subspace clustering library. */

#ifndef AUTOSC_H
#define AUTOSC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which similarity structure drives the clustering.
 */
typedef enum AutoscSolver {
  /**
   * Ridge-regularized self-representation solved in closed form.
   */
  AutoscSolver_LeastSquares = 0,
  /**
   * Sparse self-representation via orthogonal matching pursuit.
   */
  AutoscSolver_MatchingPursuit = 1,
  /**
   * Solver-free greedy neighbor search (the representation-free variant).
   */
  AutoscSolver_GreedyNeighbor = 2,
} AutoscSolver;

/**
 * Status code returned by every fallible entry point.
 */
typedef enum AutoscStatus {
  /**
   * The call succeeded.
   */
  AutoscStatus_Ok = 0,
  /**
   * A required pointer was null.
   */
  AutoscStatus_NullPointer = 1,
  /**
   * Arguments violated a precondition.
   */
  AutoscStatus_InvalidArgument = 2,
  /**
   * No triplet structure was found; the result is a single cluster.
   */
  AutoscStatus_DegenerateFallback = 3,
  /**
   * An unexpected internal failure.
   */
  AutoscStatus_InternalError = 4,
} AutoscStatus;

/**
 * Opaque clustering result; free with `autosc_result_free`.
 */
typedef struct AutoscResult AutoscResult;

/**
 * Pipeline parameters; obtain defaults from `autosc_params_default`.
 */
typedef struct AutoscParams {
  /**
   * Neighbors preserved per sample.
   */
  uintptr_t m;
  /**
   * Self-representation trade-off (least-squares solver).
   */
  double lambda_reg;
  /**
   * Model-selection reward trade-off.
   */
  double lambda_m;
  /**
   * Fusion reward trade-off.
   */
  double lambda_f;
  enum AutoscSolver solver;
} AutoscParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *autosc_version(void);

/**
 * Fills `out` with the default parameters (m = 8, lambda_reg = 0.1,
 * lambda_m = lambda_f = 1, least-squares solver).
 *
 * # Safety
 * `out` must point to writable memory for one `AutoscParams`.
 */
enum AutoscStatus autosc_params_default(struct AutoscParams *out);

/**
 * Clusters a column-major `n_features x n_samples` array and writes an
 * owned result handle to `out_result`.
 *
 * Returns `DegenerateFallback` (with a valid single-cluster handle) when
 * no triplet structure exists.
 *
 * # Safety
 * `data` must point to `n_features * n_samples` doubles, `params` to a
 * valid parameter struct, and `out_result` to a writable pointer slot.
 */
enum AutoscStatus autosc_cluster(const double *data,
                                 uintptr_t n_features,
                                 uintptr_t n_samples,
                                 const struct AutoscParams *params,
                                 struct AutoscResult **out_result);

/**
 * Estimated number of clusters; 0 for a null handle.
 *
 * # Safety
 * `result` must be a handle from `autosc_cluster` (or null).
 */
uintptr_t autosc_result_k_hat(const struct AutoscResult *result);

/**
 * Number of labeled samples; 0 for a null handle.
 *
 * # Safety
 * `result` must be a handle from `autosc_cluster` (or null).
 */
uintptr_t autosc_result_n_samples(const struct AutoscResult *result);

/**
 * Copies the label of every sample into `out`, which must hold `len`
 * entries with `len` at least the sample count.
 *
 * # Safety
 * `result` must be a live handle and `out` writable for `len` entries.
 */
enum AutoscStatus autosc_result_labels(const struct AutoscResult *result,
                                       uintptr_t *out,
                                       uintptr_t len);

/**
 * Releases a result handle; null is ignored.
 *
 * # Safety
 * `result` must be a handle from `autosc_cluster`, freed at most once.
 */
void autosc_result_free(struct AutoscResult *result);

/**
 * Normalized mutual information between two labelings of `len` samples.
 *
 * # Safety
 * `a` and `b` must point to `len` labels each; `out` must be writable.
 */
enum AutoscStatus autosc_nmi(const uintptr_t *a, const uintptr_t *b, uintptr_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUTOSC_H */
