#ifndef LASER_H
#define LASER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LaserAdjust {
  LASER_ADJUST_NONE = 0,
  LASER_ADJUST_OLS = 1,
  LASER_ADJUST_SMOOTHER = 2,
} LaserAdjust;

typedef enum LaserEngine {
  LASER_ENGINE_LOCFDR = 0,
  LASER_ENGINE_BH = 1,
} LaserEngine;

typedef enum LaserNullMethod {
  LASER_NULL_METHOD_LASER = 0,
  LASER_NULL_METHOD_QUANTILE = 1,
} LaserNullMethod;

typedef enum LaserSelector {
  LASER_SELECTOR_BIC = 0,
  LASER_SELECTOR_AIC = 1,
  LASER_SELECTOR_NONE = 2,
} LaserSelector;

typedef enum LaserStatus {
  LASER_STATUS_OK = 0,
  LASER_STATUS_NULL_POINTER = 1,
  LASER_STATUS_INVALID_ARGUMENT = 2,
  LASER_STATUS_DATA = 3,
  LASER_STATUS_NUMERICAL = 4,
  LASER_STATUS_PANIC = 5,
} LaserStatus;

/*
 Opaque fitted customizer (relevance model plus configuration).
 */
typedef struct LaserCustomizer LaserCustomizer;

/*
 Opaque dataset.
 */
typedef struct LaserDataset LaserDataset;

/*
 Opaque macro inference result.
 */
typedef struct LaserReport LaserReport;

/*
 Settings for `laser_customizer_new`. Start from `laser_options_default()`.
 */
typedef struct LaserOptions {
  size_t m;
  size_t k;
  enum LaserSelector selector;
  bool interactions;
  enum LaserAdjust adjust;
  enum LaserNullMethod null_method;
  size_t bags;
  /*
   0 uses N.
   */
  size_t laser_size;
  uint64_t seed;
} LaserOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *laser_last_error(void);

const char *laser_version(void);

/*
 Dataset from row-major covariates `x` (`n * p` values) and scores `z`.

 # Safety
 `x` must point to `n * p` doubles, `z` to `n` doubles, `out` to writable
 storage for one pointer.
 */
enum LaserStatus laser_dataset_new(const double *x,
                                   size_t n,
                                   size_t p,
                                   const double *z,
                                   struct LaserDataset **out);

/*
 Reads a CSV. `z_column` may be null for the default `z`.

 # Safety
 `path` and `z_column` (if not null) must be NUL-terminated strings.
 */
enum LaserStatus laser_dataset_load_csv(const char *path,
                                        const char *z_column,
                                        struct LaserDataset **out);

/*
 Funnel simulation with default settings.

 # Safety
 `out` must be writable.
 */
enum LaserStatus laser_dataset_simulate_funnel(uint64_t seed, struct LaserDataset **out);

/*
 Number of rows, 0 for null.

 # Safety
 `data` must be null or a live dataset handle.
 */
size_t laser_dataset_len(const struct LaserDataset *data);

/*
 Number of covariates, 0 for null.

 # Safety
 `data` must be null or a live dataset handle.
 */
size_t laser_dataset_covariates(const struct LaserDataset *data);

/*
 # Safety
 `data` must be null or a handle not yet freed.
 */
void laser_dataset_free(struct LaserDataset *data);

struct LaserOptions laser_options_default(void);

/*
 Fits the relevance model. `options` may be null for defaults.

 # Safety
 `data` must be a live dataset handle; `options` null or valid.
 */
enum LaserStatus laser_customizer_new(const struct LaserDataset *data,
                                      const struct LaserOptions *options,
                                      struct LaserCustomizer **out);

/*
 # Safety
 `cz` must be null or a handle not yet freed.
 */
void laser_customizer_free(struct LaserCustomizer *cz);

/*
 CUST index at profile `x` and whether the relevance there is flat.

 # Safety
 `x` must point to `p` doubles; outputs must be writable.
 */
enum LaserStatus laser_relevance(const struct LaserCustomizer *cz,
                                 const double *x,
                                 size_t p,
                                 double *out_cust,
                                 bool *out_flat);

/*
 Bag-averaged customized local fdr of score `z` at profile `x`.

 # Safety
 `x` must point to `p` doubles; `out` must be writable.
 */
enum LaserStatus laser_customized_fdr(const struct LaserCustomizer *cz,
                                      const double *x,
                                      size_t p,
                                      double z,
                                      double *out);

/*
 Relevant null `(mu0, sigma0, pi0)` at profile `x`.

 # Safety
 `x` must point to `p` doubles; outputs must be writable.
 */
enum LaserStatus laser_relevant_null(const struct LaserCustomizer *cz,
                                     const double *x,
                                     size_t p,
                                     enum LaserNullMethod method,
                                     double *out_mu0,
                                     double *out_sigma0,
                                     double *out_pi0);

/*
 Writes up to `cap` LASER draws (z-domain) for bag `bag` at `x` and the
 full sample size to `out_len`. Pass `cap = 0` to query the size.

 # Safety
 `x` must point to `p` doubles; `out` to `cap` writable doubles.
 */
enum LaserStatus laser_generate(const struct LaserCustomizer *cz,
                                const double *x,
                                size_t p,
                                size_t bag,
                                double *out,
                                size_t cap,
                                size_t *out_len);

/*
 Customized inference over every case.

 # Safety
 `cz` must be a live handle; `out` writable.
 */
enum LaserStatus laser_macro(const struct LaserCustomizer *cz,
                             enum LaserEngine engine,
                             double alpha,
                             struct LaserReport **out);

/*
 Number of cases, 0 for null.

 # Safety
 `r` must be null or a live report handle.
 */
size_t laser_report_len(const struct LaserReport *r);

/*
 Number of significant cases, 0 for null.

 # Safety
 `r` must be null or a live report handle.
 */
size_t laser_report_rejections(const struct LaserReport *r);

/*
 Per-case fdr (q-values for BH), DPS and significance flags in input
 order. Each output array needs `laser_report_len` slots; any may be null.

 # Safety
 Non-null outputs must have room for `n` values.
 */
enum LaserStatus laser_report_cases(const struct LaserReport *r,
                                    size_t n,
                                    double *out_fdr,
                                    double *out_dps,
                                    uint8_t *out_significant);

/*
 # Safety
 `r` must be null or a handle not yet freed.
 */
void laser_report_free(struct LaserReport *r);

/*
 rEB posterior mean and `1 - alpha` HPD hull for score `z` at `x`, in the
 z-domain.

 # Safety
 `x` must point to `p` doubles; outputs must be writable.
 */
enum LaserStatus laser_reb(const struct LaserCustomizer *cz,
                           const double *x,
                           size_t p,
                           double z,
                           double alpha,
                           double *out_mean,
                           double *out_lower,
                           double *out_upper);

/*
 Benjamini-Hochberg at level `alpha`; `out_reject[i]` is 1 for rejected
 hypotheses.

 # Safety
 `p_values` must point to `n` doubles, `out_reject` to `n` bytes.
 */
enum LaserStatus laser_bh(const double *p_values, size_t n, double alpha, uint8_t *out_reject);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LASER_H */
