#ifndef DESPECKLE_H
#define DESPECKLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_INVALID_ARGUMENT = 1,
  DS_STATUS_OUT_OF_BOUNDS = 2,
  DS_STATUS_DOMAIN = 3,
  DS_STATUS_DEGENERATE = 4,
  DS_STATUS_FORMAT = 5,
  DS_STATUS_CONSISTENCY = 6,
  DS_STATUS_IO = 7,
  DS_STATUS_NULL_POINTER = 8,
  DS_STATUS_PANIC = 9,
} DsStatus;

typedef enum DsFormat {
  /**
   * Pick from the file extension.
   */
  DS_FORMAT_AUTO = 0,
  DS_FORMAT_ASCII = 1,
  DS_FORMAT_RAW_F64 = 2,
  DS_FORMAT_PGM16 = 3,
} DsFormat;

typedef enum DsDistance {
  DS_DISTANCE_HELLINGER = 0,
  DS_DISTANCE_KULLBACK_LEIBLER = 1,
  DS_DISTANCE_RENYI = 2,
} DsDistance;

typedef enum DsSharedLooks {
  DS_SHARED_LOOKS_CENTRAL = 0,
  DS_SHARED_LOOKS_POOLED = 1,
} DsSharedLooks;

/**
 * Opaque raster handle.
 */
typedef struct DsRaster DsRaster;

/**
 * Settings of the stochastic-distance filter. Start from
 * `ds_filter_params_default`.
 */
typedef struct DsFilterParams {
  enum DsDistance distance;
  /**
   * 5 or 7.
   */
  uint32_t window;
  /**
   * Significance for the eight tests as a whole.
   */
  double alpha;
  /**
   * Rényi order, used by `DS_DISTANCE_RENYI` only.
   */
  double renyi_order;
  /**
   * Degrees of freedom of the reference chi-square law (1 or 2).
   */
  uint32_t dof;
  enum DsSharedLooks shared_looks;
} DsFilterParams;

typedef struct DsGammaFit {
  double looks;
  double mean;
  /**
   * Non-zero when the looks estimate saturated on a constant sample.
   */
  uint8_t degenerate;
  /**
   * Non-zero when exact zeros were shifted before fitting.
   */
  uint8_t zeros_shifted;
} DsGammaFit;

/**
 * Quality measures; NaN marks a measure that could not be computed.
 */
typedef struct DsMetrics {
  double enl;
  double line_contrast_error;
  double edge_gradient;
  double edge_variance;
  double q_mean;
  double q_std;
  double beta_rho;
  double mae;
  double mse;
  double nmse;
  double dcon;
} DsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *ds_last_error(void);

/**
 * Copies `width * height` row-major values into a new raster.
 *
 * # Safety
 * `data` must point to `width * height` readable doubles and `out` to a
 * writable handle slot.
 */
enum DsStatus ds_raster_new(size_t width, size_t height, const double *data, struct DsRaster **out);

/**
 * Releases a raster. NULL is ignored.
 *
 * # Safety
 * `raster` must come from this library and not be used afterwards.
 */
void ds_raster_free(struct DsRaster *raster);

/**
 * Width in pixels, 0 for NULL.
 *
 * # Safety
 * `raster` must be NULL or a live handle.
 */
size_t ds_raster_width(const struct DsRaster *raster);

/**
 * Height in pixels, 0 for NULL.
 *
 * # Safety
 * `raster` must be NULL or a live handle.
 */
size_t ds_raster_height(const struct DsRaster *raster);

/**
 * Copies the row-major pixel values into `out`, which holds `len` doubles;
 * `len` must equal width × height.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum DsStatus ds_raster_copy_data(const struct DsRaster *raster, double *out, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum DsStatus ds_raster_read(const char *path, enum DsFormat format, struct DsRaster **out);

/**
 * # Safety
 * `raster` must be a live handle and `path` a NUL-terminated string.
 */
enum DsStatus ds_raster_write(const struct DsRaster *raster,
                              const char *path,
                              enum DsFormat format);

/**
 * Hellinger test, 5×5 window, α = 0.2, Rényi order 0.5, one degree of
 * freedom, looks from the central block.
 */
struct DsFilterParams ds_filter_params_default(void);

/**
 * Stochastic-distance filter.
 *
 * # Safety
 * `input` must be a live handle, `params` readable and `out` a writable
 * handle slot.
 */
enum DsStatus ds_filter_stochastic(const struct DsRaster *input,
                                   const struct DsFilterParams *params,
                                   struct DsRaster **out);

/**
 * Lee filter with a square window of odd side and the nominal looks of the
 * data.
 *
 * # Safety
 * `input` must be a live handle and `out` a writable handle slot.
 */
enum DsStatus ds_filter_lee(const struct DsRaster *input,
                            uint32_t window,
                            double looks,
                            struct DsRaster **out);

/**
 * Maximum-likelihood Gamma fit of `n` values.
 *
 * # Safety
 * `values` must point to `n` readable doubles and `out` be writable.
 */
enum DsStatus ds_gamma_mle(const double *values, size_t n, struct DsGammaFit *out);

/**
 * Per-test level keeping `num_tests` tests at overall level `alpha`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DsStatus ds_sidak_level(double alpha, uint32_t num_tests, double *out);

/**
 * Upper tail of the chi-square law with `dof` degrees of freedom at `s`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DsStatus ds_chi2_survival(double s, uint32_t dof, double *out);

/**
 * Compares `test` with `reference`. With `standard_phantom` non-zero the
 * reference is taken as a phantom in the standard square layout, which
 * adds the ENL, line and edge measures.
 *
 * # Safety
 * Both rasters must be live handles and `out` writable.
 */
enum DsStatus ds_evaluate(const struct DsRaster *reference,
                          const struct DsRaster *test,
                          uint8_t standard_phantom,
                          struct DsMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DESPECKLE_H */
