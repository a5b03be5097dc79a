#ifndef ULDP_H
#define ULDP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UldpBaseline {
  ULDP_BASELINE_GROUP_PRIVACY = 0,
  ULDP_BASELINE_SAMPLE_ONE = 1,
} UldpBaseline;

typedef enum UldpStatus {
  ULDP_STATUS_OK = 0,
  ULDP_STATUS_NULL_POINTER = 1,
  ULDP_STATUS_INVALID_PARAMETER = 2,
  ULDP_STATUS_DIMENSION = 3,
  ULDP_STATUS_INSUFFICIENT_USERS = 4,
  ULDP_STATUS_CERTIFICATION = 5,
  ULDP_STATUS_ORACLE = 6,
  ULDP_STATUS_SPEC = 7,
  ULDP_STATUS_IO = 8,
  ULDP_STATUS_PANIC = 9,
} UldpStatus;

/**
 * Trained histogram model.
 */
typedef struct UldpGridModel UldpGridModel;

/**
 * Kashin frame with its certified constant.
 */
typedef struct UldpKashinFrame UldpKashinFrame;

/**
 * Seeded random stream.
 */
typedef struct UldpStream UldpStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t uldp_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *uldp_version(void);

struct UldpStream *uldp_stream_new(uint64_t seed);

/**
 * Child stream `label` of `parent`; null when `parent` is null.
 *
 * # Safety
 * `parent` must be null or a live stream handle.
 */
struct UldpStream *uldp_stream_child(const struct UldpStream *parent, uint64_t label);

/**
 * # Safety
 * `stream` must be null or a handle from this library not yet freed.
 */
void uldp_stream_free(struct UldpStream *stream);

/**
 * Two-stage mean of `n` users with `m` samples each (`values` is row-major
 * `n x m`), all in `[-radius, radius]`, with the default bin geometry.
 *
 * # Safety
 * `values` must point to `n*m` doubles; `stream` and `out` must be valid.
 */
enum UldpStatus uldp_mean1d_estimate(const double *values,
                                     size_t n,
                                     size_t m,
                                     double radius,
                                     double epsilon,
                                     const struct UldpStream *stream,
                                     double *out);

/**
 * User-level (ε) baseline through an item-level conversion.
 *
 * # Safety
 * As [`uldp_mean1d_estimate`].
 */
enum UldpStatus uldp_baseline_mean(const double *values,
                                   size_t n,
                                   size_t m,
                                   double radius,
                                   double epsilon,
                                   enum UldpBaseline kind,
                                   const struct UldpStream *stream,
                                   double *out);

/**
 * Mean of vectors with every coordinate in `[-radius, radius]`. `values` is
 * row-major `n x m x d`; `out` receives `d` doubles.
 *
 * # Safety
 * `values` must point to `n*m*d` doubles and `out` to `d` writable doubles.
 */
enum UldpStatus uldp_mean_linf(const double *values,
                               size_t n,
                               size_t m,
                               size_t d,
                               double radius,
                               double epsilon,
                               const struct UldpStream *stream,
                               double *out);

/**
 * Builds a certified frame for dimension `d`.
 *
 * # Safety
 * `stream` must be valid; `out` must point to writable handle storage.
 */
enum UldpStatus uldp_kashin_frame_new(size_t d,
                                      const struct UldpStream *stream,
                                      struct UldpKashinFrame **out);

/**
 * Certified constant `K` of a frame; NaN for a null handle.
 *
 * # Safety
 * `frame` must be null or a live frame handle.
 */
double uldp_kashin_frame_k(const struct UldpKashinFrame *frame);

/**
 * # Safety
 * `frame` must be null or a handle from this library not yet freed.
 */
void uldp_kashin_frame_free(struct UldpKashinFrame *frame);

/**
 * Mean of vectors in the Euclidean ball of radius `radius`, through the
 * frame's coefficients.
 *
 * # Safety
 * As [`uldp_mean_linf`]; `frame` must be a live frame of dimension `d`.
 */
enum UldpStatus uldp_mean_l2(const double *values,
                             size_t n,
                             size_t m,
                             size_t d,
                             double radius,
                             double epsilon,
                             const struct UldpKashinFrame *frame,
                             const struct UldpStream *stream,
                             double *out);

/**
 * Parses a model from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable handle storage.
 */
enum UldpStatus uldp_grid_model_from_json(const char *json, struct UldpGridModel **out);

/**
 * # Safety
 * `model` must be a live model; `x` must point to `d` doubles.
 */
enum UldpStatus uldp_grid_model_predict_class(const struct UldpGridModel *model,
                                              const double *x,
                                              size_t d,
                                              double *out);

/**
 * # Safety
 * As [`uldp_grid_model_predict_class`].
 */
enum UldpStatus uldp_grid_model_predict_reg(const struct UldpGridModel *model,
                                            const double *x,
                                            size_t d,
                                            double label_bound,
                                            double *out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void uldp_grid_model_free(struct UldpGridModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ULDP_H */
