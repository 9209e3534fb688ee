#ifndef XFERLAB_H
#define XFERLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum XlStatus {
  XL_STATUS_OK = 0,
  XL_STATUS_NULL_POINTER = 1,
  XL_STATUS_INVALID_ARGUMENT = 2,
  XL_STATUS_BUFFER_TOO_SMALL = 3,
  XL_STATUS_DIMENSION = 4,
  XL_STATUS_DEGENERATE_RANK = 5,
  XL_STATUS_CONTRACT = 6,
  XL_STATUS_CONFIG = 7,
  XL_STATUS_DIVERSITY = 8,
  XL_STATUS_INDEX = 9,
  XL_STATUS_ALL_SUPPRESSED = 10,
  XL_STATUS_DEGENERATE_CLASSIFIER = 11,
  XL_STATUS_UNSUPPORTED = 12,
  XL_STATUS_NOT_APPLICABLE = 13,
  XL_STATUS_DOMAIN = 14,
  XL_STATUS_IO = 15,
  XL_STATUS_PANIC = 16,
} XlStatus;

/**
 * Values for [`XlEnsembleSpec::snr_kind`].
 */
typedef enum XlSnrKind {
  XL_SNR_KIND_UNIFORM = 0,
  XL_SNR_KIND_TWO_GROUP = 1,
} XlSnrKind;

/**
 * Values for [`XlEnsembleSpec::noise_kind`].
 */
typedef enum XlNoiseKind {
  XL_NOISE_KIND_GAUSSIAN = 0,
  XL_NOISE_KIND_BOUNDED_UNIFORM = 1,
} XlNoiseKind;

/**
 * Values for [`XlEstimator::kind`].
 */
typedef enum XlEstimatorKind {
  XL_ESTIMATOR_KIND_STANDARD = 0,
  XL_ESTIMATOR_KIND_ADV_L2 = 1,
  XL_ESTIMATOR_KIND_ADV_LINF = 2,
} XlEstimatorKind;

/**
 * A labeled dataset with labels in {-1, +1}.
 */
typedef struct XlDataset XlDataset;

/**
 * A sampled task ensemble (basis, task vectors, noise model).
 */
typedef struct XlEnsemble XlEnsemble;

/**
 * Output of the transfer pipeline.
 */
typedef struct XlTransfer XlTransfer;

/**
 * Generative-model parameters. `support_size == 0` means a dense basis.
 */
typedef struct XlEnsembleSpec {
  size_t p;
  size_t r;
  size_t tasks;
  /**
   * An [`XlSnrKind`] value.
   */
  uint32_t snr_kind;
  double base_norm;
  double alpha;
  double frac_strong;
  size_t support_size;
  /**
   * An [`XlNoiseKind`] value.
   */
  uint32_t noise_kind;
  double rho;
  double target_norm;
} XlEnsembleSpec;

/**
 * An estimator choice. `epsilon` must be 0 for the standard estimator.
 */
typedef struct XlEstimator {
  /**
   * An [`XlEstimatorKind`] value.
   */
  uint32_t kind;
  double epsilon;
} XlEstimator;

typedef struct XlEvalReport {
  double sin_theta;
  double excess_risk;
  double target_accuracy;
  size_t suppressed_count;
} XlEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *xl_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to fit) and returns the full message length including the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t xl_last_error_message(char *buf, size_t len);

/**
 * Draws a task ensemble from `spec` with the given seed.
 *
 * # Safety
 * `spec` and `out` must be valid pointers.
 */
enum XlStatus xl_ensemble_new(const struct XlEnsembleSpec *spec,
                              uint64_t seed,
                              struct XlEnsemble **out);

/**
 * # Safety
 * `ens` must be null or a handle from [`xl_ensemble_new`] not yet freed.
 */
void xl_ensemble_free(struct XlEnsemble *ens);

/**
 * # Safety
 * `ens` must be a live handle; output pointers may be null.
 */
enum XlStatus xl_ensemble_dims(const struct XlEnsemble *ens, size_t *p, size_t *r, size_t *tasks);

/**
 * Writes the true basis `B` (column-major `p × r`).
 *
 * # Safety
 * `ens` must be a live handle and `buf` valid for `len` doubles.
 */
enum XlStatus xl_ensemble_basis(const struct XlEnsemble *ens, double *buf, size_t len);

/**
 * Writes the class mean `μ_t` of task `t` (1-based; `T + 1` is the target).
 *
 * # Safety
 * `ens` must be a live handle and `buf` valid for `len` doubles.
 */
enum XlStatus xl_ensemble_mean(const struct XlEnsemble *ens, size_t t, double *buf, size_t len);

/**
 * # Safety
 * `ens` and `out` must be valid pointers.
 */
enum XlStatus xl_ensemble_diversity(const struct XlEnsemble *ens, double *out);

/**
 * Draws `n` labeled points from task `t` of the ensemble.
 *
 * # Safety
 * `ens` must be a live handle and `out` a valid pointer.
 */
enum XlStatus xl_dataset_sample(const struct XlEnsemble *ens,
                                size_t t,
                                size_t n,
                                uint64_t seed,
                                struct XlDataset **out);

/**
 * Builds a dataset from caller data: `inputs` row-major `n × p`, `labels` of ±1.
 *
 * # Safety
 * `inputs` must be valid for `n * p` doubles, `labels` for `n` bytes, `out` a valid pointer.
 */
enum XlStatus xl_dataset_new(const double *inputs,
                             const int8_t *labels,
                             size_t n,
                             size_t p,
                             struct XlDataset **out);

/**
 * # Safety
 * `ds` must be null or a dataset handle not yet freed.
 */
void xl_dataset_free(struct XlDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle; output pointers may be null.
 */
enum XlStatus xl_dataset_shape(const struct XlDataset *ds, size_t *n, size_t *p);

/**
 * Copies inputs (row-major `n × p`) and labels out of a dataset.
 *
 * # Safety
 * `inputs` must be valid for `inputs_len` doubles and `labels` for `labels_len` bytes.
 */
enum XlStatus xl_dataset_copy(const struct XlDataset *ds,
                              double *inputs,
                              size_t inputs_len,
                              int8_t *labels,
                              size_t labels_len);

/**
 * `‖sin Θ(E, F)‖_F` for two column-major `p × r` orthonormal matrices.
 *
 * # Safety
 * `e` and `f` must be valid for `p * r` doubles and `out` a valid pointer.
 */
enum XlStatus xl_sin_theta_dist(const double *e, const double *f, size_t p, size_t r, double *out);

/**
 * Fits one task: writes `β` (length `p`), the achieved objective and whether
 * the fit was suppressed to zero. `objective` and `suppressed` may be null.
 *
 * # Safety
 * `ds` and `est` must be valid, `beta` valid for `len` doubles.
 */
enum XlStatus xl_fit(const struct XlDataset *ds,
                     const struct XlEstimator *est,
                     double *beta,
                     size_t len,
                     double *objective,
                     bool *suppressed);

/**
 * Learns a rank-`r` representation from the source datasets and a head on
 * the target dataset.
 *
 * # Safety
 * `sources` must hold `n_sources` live dataset handles; `target`, `est` and
 * `out` must be valid.
 */
enum XlStatus xl_transfer(const struct XlDataset *const *sources,
                          size_t n_sources,
                          const struct XlDataset *target,
                          size_t r,
                          const struct XlEstimator *est,
                          struct XlTransfer **out);

/**
 * # Safety
 * `t` must be null or a transfer handle not yet freed.
 */
void xl_transfer_free(struct XlTransfer *t);

/**
 * Writes `Ŵ₁` (column-major `p × r`).
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` doubles.
 */
enum XlStatus xl_transfer_w1(const struct XlTransfer *t, double *buf, size_t len);

/**
 * Writes the target head `ŵ₂` (length `r`).
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` doubles.
 */
enum XlStatus xl_transfer_w2(const struct XlTransfer *t, double *buf, size_t len);

/**
 * Writes the composed predictor `Ŵ₁ŵ₂` (length `p`).
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` doubles.
 */
enum XlStatus xl_transfer_predictor(const struct XlTransfer *t, double *buf, size_t len);

/**
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum XlStatus xl_transfer_suppressed_count(const struct XlTransfer *t, size_t *out);

/**
 * Scores a transfer output against the ensemble it was trained on.
 * `mc_samples` and `seed` are used only for non-Gaussian noise.
 *
 * # Safety
 * `t`, `ens` and `out` must be valid pointers.
 */
enum XlStatus xl_evaluate(const struct XlTransfer *t,
                          const struct XlEnsemble *ens,
                          size_t mc_samples,
                          uint64_t seed,
                          struct XlEvalReport *out);

/**
 * Name of a status code as a static string; null for unknown codes.
 */
const char *xl_status_name(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XFERLAB_H */
