/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PLANECLUST_H
#define PLANECLUST_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_INPUT = 2,
  PC_STATUS_SINGULAR = 3,
  PC_STATUS_DEGENERATE_CLUSTER = 4,
  PC_STATUS_FIT_FAILED = 5,
  PC_STATUS_PARSE = 6,
  PC_STATUS_IO = 7,
  PC_STATUS_BUFFER_TOO_SMALL = 8,
  PC_STATUS_PANIC = 9,
} PcStatus;

typedef enum PcMethod {
  PC_METHOD_RFLKPC = 0,
  PC_METHOD_KPC = 1,
  PC_METHOD_FKPC = 2,
} PcMethod;

/**
 * Opaque point set, optionally labeled.
 */
typedef struct PcDataset PcDataset;

/**
 * Opaque fit outcome.
 */
typedef struct PcFitResult PcFitResult;

/**
 * Hyperparameters; start from [`pc_params_default`].
 */
typedef struct PcParams {
  size_t k;
  double m;
  double alpha;
  double lambda;
  double eta;
  size_t max_outer;
  size_t max_inner;
  double inner_tol;
  double eps_proj;
  uint64_t seed;
} PcParams;

typedef struct PcScores {
  double acc;
  double nmi;
  double ari;
  double purity;
} PcScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *pc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pc_version(void);

struct PcParams pc_params_default(size_t k);

/**
 * Copies `n * dim` row-major values (and `n` labels when `labels` is not
 * NULL; negative labels mark outliers) into a new dataset.
 *
 * # Safety
 * `points` must be readable for `n * dim` doubles, `labels` for `n` values
 * or NULL, and `out` writable.
 */
enum PcStatus pc_dataset_new(const double *points,
                             size_t n,
                             size_t dim,
                             const int64_t *labels,
                             struct PcDataset **out);

/**
 * Reads a CSV file. `label_column` is a header name or zero-based index,
 * or NULL for unlabeled data.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` writable.
 */
enum PcStatus pc_dataset_load_csv(const char *path,
                                  bool has_header,
                                  const char *label_column,
                                  struct PcDataset **out);

/**
 * Generates a labeled synthetic dataset with default sizes and noise scale.
 * `family`: s1, s2, s3, toy, scene3d. `noise`: clean, gaussian, laplace,
 * student_t1, uniform_outliers.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` writable.
 */
enum PcStatus pc_dataset_generate(const char *family,
                                  const char *noise,
                                  uint64_t seed,
                                  struct PcDataset **out);

/**
 * Number of points, 0 for NULL.
 *
 * # Safety
 * `data` must be a live handle or NULL.
 */
size_t pc_dataset_len(const struct PcDataset *data);

/**
 * # Safety
 * `data` must be a live handle or NULL.
 */
size_t pc_dataset_dim(const struct PcDataset *data);

/**
 * Copies the canonical labels (`0..C`, outliers `-1`) into `out`. Fails
 * with `PC_STATUS_INVALID_INPUT` for unlabeled data.
 *
 * # Safety
 * `data` must be a live handle; `out` writable for `len` values.
 */
enum PcStatus pc_dataset_labels(const struct PcDataset *data, int64_t *out, size_t len);

/**
 * # Safety
 * `data` must come from this library and not be freed twice.
 */
void pc_dataset_free(struct PcDataset *data);

/**
 * Fits `method` to `data`. KPC uses `params.k`, `seed` and `max_outer`;
 * FkPC additionally `m` and `eta`.
 *
 * # Safety
 * `data` and `params` must be valid; `out` writable.
 */
enum PcStatus pc_fit(const struct PcDataset *data,
                     enum PcMethod method,
                     const struct PcParams *params,
                     struct PcFitResult **out);

/**
 * Clusters in the fit, 0 for NULL.
 *
 * # Safety
 * `fit` must be a live handle or NULL.
 */
size_t pc_fit_k(const struct PcFitResult *fit);

/**
 * # Safety
 * `fit` must be a live handle or NULL.
 */
size_t pc_fit_dim(const struct PcFitResult *fit);

/**
 * Points covered by the fit, 0 for NULL.
 *
 * # Safety
 * `fit` must be a live handle or NULL.
 */
size_t pc_fit_len(const struct PcFitResult *fit);

/**
 * Final objective value, NaN for NULL.
 *
 * # Safety
 * `fit` must be a live handle or NULL.
 */
double pc_fit_objective(const struct PcFitResult *fit);

/**
 * # Safety
 * `fit` must be a live handle or NULL.
 */
size_t pc_fit_iterations(const struct PcFitResult *fit);

/**
 * # Safety
 * `fit` must be a live handle or NULL.
 */
bool pc_fit_converged(const struct PcFitResult *fit);

/**
 * Copies one cluster id per point.
 *
 * # Safety
 * `fit` must be a live handle; `out` writable for `len` values.
 */
enum PcStatus pc_fit_labels(const struct PcFitResult *fit, size_t *out, size_t len);

/**
 * Copies the `k * dim` unit normals, row-major.
 *
 * # Safety
 * `fit` must be a live handle; `out` writable for `len` values.
 */
enum PcStatus pc_fit_normals(const struct PcFitResult *fit, double *out, size_t len);

/**
 * Copies the `k * dim` plane centers, row-major.
 *
 * # Safety
 * `fit` must be a live handle; `out` writable for `len` values.
 */
enum PcStatus pc_fit_centers(const struct PcFitResult *fit, double *out, size_t len);

/**
 * Copies the `n * k` membership matrix, row-major.
 *
 * # Safety
 * `fit` must be a live handle; `out` writable for `len` values.
 */
enum PcStatus pc_fit_membership(const struct PcFitResult *fit, double *out, size_t len);

/**
 * # Safety
 * `fit` must come from this library and not be freed twice.
 */
void pc_fit_free(struct PcFitResult *fit);

/**
 * ACC, NMI (geometric), ARI and purity of `pred` against `truth`.
 *
 * # Safety
 * `truth` and `pred` must be readable for `n` values; `out` writable.
 */
enum PcStatus pc_scores(const int64_t *truth, const int64_t *pred, size_t n, struct PcScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANECLUST_H */
