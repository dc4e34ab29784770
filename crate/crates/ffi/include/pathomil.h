#ifndef PATHOMIL_H
#define PATHOMIL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PATHOMIL_OK 0

#define PATHOMIL_ERR_NULL 1

#define PATHOMIL_ERR_INVALID_ARGUMENT 2

#define PATHOMIL_ERR_CONFIG 3

#define PATHOMIL_ERR_FORMAT 4

#define PATHOMIL_ERR_IO 5

#define PATHOMIL_ERR_NUMERIC 6

#define PATHOMIL_ERR_BUFFER_TOO_SMALL 7

#define PATHOMIL_ERR_PANIC 8

/**
 * Bag of instance features.
 */
typedef struct PathomilBag PathomilBag;

/**
 * Boosted-tree ensemble.
 */
typedef struct PathomilGbdt PathomilGbdt;

/**
 * Trained MIL model plus its stored feature scaler.
 */
typedef struct PathomilModel PathomilModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message, excluding the NUL; 0 when none.
 */
size_t pathomil_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated, truncated to fit) into
 * `buf`. Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pathomil_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pathomil_version(void);

/**
 * Loads a PMD1 model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t pathomil_model_load(const char *path, struct PathomilModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`pathomil_model_load`], freed once.
 */
void pathomil_model_free(struct PathomilModel *model);

/**
 * Instance feature width the model expects.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
int32_t pathomil_model_feature_dim(const struct PathomilModel *model, size_t *out);

/**
 * Loads a BAG1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t pathomil_bag_load(const char *path, struct PathomilBag **out);

/**
 * Builds a bag from a row-major `n × d` feature array. Coordinates are
 * `2n` values `x0, y0, x1, y1, ...`, or null for all zeros.
 *
 * # Safety
 * `features` must point to `n*d` doubles and `coords`, when non-null, to
 * `2n` integers; `out` must be writable.
 */
int32_t pathomil_bag_from_features(const double *features,
                                   size_t n,
                                   size_t d,
                                   const uint32_t *coords,
                                   uint8_t label,
                                   struct PathomilBag **out);

/**
 * # Safety
 * `bag` must be null or a handle from this library, freed once.
 */
void pathomil_bag_free(struct PathomilBag *bag);

/**
 * Number of instances in a bag, or 0 for a null handle.
 *
 * # Safety
 * `bag` must be null or a live handle.
 */
size_t pathomil_bag_len(const struct PathomilBag *bag);

/**
 * Eval-mode class probabilities; writes `n_classes` values.
 *
 * # Safety
 * Handles must be live; `probs` must hold `len` doubles.
 */
int32_t pathomil_model_predict(const struct PathomilModel *model,
                               const struct PathomilBag *bag,
                               double *probs,
                               size_t len);

/**
 * Attention weights over the bag's instances. `class_index < 0` selects the
 * predicted class (ABMIL); CLAM has a single attention branch.
 *
 * # Safety
 * Handles must be live; `weights` must hold `len` doubles.
 */
int32_t pathomil_model_attention(const struct PathomilModel *model,
                                 const struct PathomilBag *bag,
                                 int32_t class_index,
                                 double *weights,
                                 size_t len);

/**
 * The 23 enhanced slide-level features.
 *
 * # Safety
 * Handles must be live; `out` must hold `len >= 23` doubles.
 */
int32_t pathomil_enhanced_features(const struct PathomilModel *model,
                                   const struct PathomilBag *bag,
                                   double *out,
                                   size_t len);

/**
 * Loads a PGB1 ensemble file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t pathomil_gbdt_load(const char *path, struct PathomilGbdt **out);

/**
 * # Safety
 * `gbdt` must be null or a handle from [`pathomil_gbdt_load`], freed once.
 */
void pathomil_gbdt_free(struct PathomilGbdt *gbdt);

/**
 * Class probabilities for one feature row of `n_features` values.
 *
 * # Safety
 * `x` must hold `n_features` doubles; `probs` must hold `len` doubles.
 */
int32_t pathomil_gbdt_predict(const struct PathomilGbdt *gbdt,
                              const double *x,
                              size_t n_features,
                              double *probs,
                              size_t len);

/**
 * Otsu threshold of a 256-bin histogram; foreground is `value > threshold`.
 *
 * # Safety
 * `hist` must point to 256 counts; `threshold` must be writable.
 */
int32_t pathomil_otsu_threshold(const uint64_t *hist, uint8_t *threshold);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHOMIL_H */
