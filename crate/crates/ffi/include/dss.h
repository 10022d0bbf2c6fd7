#ifndef DSS_H
#define DSS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DssStatus {
  DssStatus_Ok = 0,
  DssStatus_NullPointer = 1,
  /**
   * Invalid setting or argument.
   */
  DssStatus_Config = 2,
  /**
   * Unreadable or inconsistent data.
   */
  DssStatus_Data = 3,
  /**
   * Numerical failure inside the sampler.
   */
  DssStatus_Numerical = 4,
  /**
   * A result could not be written.
   */
  DssStatus_Output = 5,
  /**
   * Internal error; the library caught a panic.
   */
  DssStatus_Internal = 6,
} DssStatus;

/**
 * Shrinkage prior family.
 */
typedef enum DssPrior {
  DssPrior_Nmig = 0,
  DssPrior_NormalGamma = 1,
  DssPrior_Laplace = 2,
} DssPrior;

/**
 * Posterior summary of the coefficient paths.
 */
typedef enum DssStatistic {
  DssStatistic_Mean = 0,
  DssStatistic_Median = 1,
  /**
   * 2.5% quantile.
   */
  DssStatistic_Lower = 2,
  /**
   * 97.5% quantile.
   */
  DssStatistic_Upper = 3,
  /**
   * Posterior slab probability.
   */
  DssStatistic_Inclusion = 4,
} DssStatistic;

/**
 * Sampler settings.
 */
typedef struct DssConfig DssConfig;

/**
 * Regression data.
 */
typedef struct DssDataset DssDataset;

/**
 * Output of a fitted chain.
 */
typedef struct DssFit DssFit;

/**
 * Posterior moments of a scalar parameter.
 */
typedef struct DssMoments {
  double mean;
  double median;
  double lower;
  double upper;
} DssMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dss_last_error(void);

/**
 * Library version string (static storage).
 */
const char *dss_version(void);

/**
 * Build a dataset from `n` responses and an `n x q` row-major regressor
 * matrix.
 *
 * # Safety
 * `y` must point to `n` doubles, `x` to `n * q` doubles and `out` to
 * writable storage for a handle.
 */
enum DssStatus dss_dataset_new(const double *y,
                               const double *x,
                               uintptr_t n,
                               uintptr_t q,
                               struct DssDataset **out);

/**
 * Load a dataset from a CSV file with a header row. Every column other
 * than `response` is used as a predictor.
 *
 * # Safety
 * `path` and `response` must be NUL-terminated strings and `out` writable.
 */
enum DssStatus dss_dataset_from_csv(const char *path,
                                    const char *response,
                                    struct DssDataset **out);

/**
 * Number of time points, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
uintptr_t dss_dataset_len(const struct DssDataset *data);

/**
 * Number of predictors, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
uintptr_t dss_dataset_predictors(const struct DssDataset *data);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void dss_dataset_free(struct DssDataset *data);

/**
 * Sampler settings for `prior` with the hyperparameters of `preset`
 * ("example1", "example2" or "inflation"; null selects "example1").
 *
 * # Safety
 * `preset` must be null or a NUL-terminated string; `out` must be writable.
 */
enum DssStatus dss_config_new(enum DssPrior prior,
                              const char *preset,
                              uintptr_t n_iter,
                              uintptr_t n_burn,
                              uint64_t seed,
                              struct DssConfig **out);

/**
 * Set one option using the configuration-file syntax, e.g. key "nu" and
 * value "5". The settings are validated after the change and left
 * untouched on failure.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum DssStatus dss_config_set(struct DssConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void dss_config_free(struct DssConfig *cfg);

/**
 * Run one chain.
 *
 * # Safety
 * `data` and `cfg` must be live handles and `out` writable.
 */
enum DssStatus dss_fit(const struct DssDataset *data,
                       const struct DssConfig *cfg,
                       struct DssFit **out);

/**
 * Copy a coefficient-path summary into `buf` (`n x q`, row-major, so entry
 * `t * q + j` is predictor `j` at time `t`). `len` must be at least `n * q`.
 *
 * # Safety
 * `fit` must be a live handle and `buf` must hold `len` doubles.
 */
enum DssStatus dss_fit_coefficients(const struct DssFit *fit,
                                    enum DssStatistic statistic,
                                    double *buf,
                                    uintptr_t len);

/**
 * Moments of a scalar parameter by name: "sigma2", or "tau2_j", "Q_j",
 * "phi_j", "omega11_j", "omega00_j" for predictor `j` (1-based).
 *
 * # Safety
 * `fit` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum DssStatus dss_fit_scalar(const struct DssFit *fit, const char *name, struct DssMoments *out);

/**
 * Metropolis-Hastings acceptance rates of predictor `j` (0-based): the AR
 * coefficient and the transition probabilities.
 *
 * # Safety
 * `fit` must be a live handle; `phi` and `transition` writable.
 */
enum DssStatus dss_fit_acceptance(const struct DssFit *fit,
                                  uintptr_t j,
                                  double *phi,
                                  double *transition);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void dss_fit_free(struct DssFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSS_H */
