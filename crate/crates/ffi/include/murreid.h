#ifndef MURREID_H
#define MURREID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of dialect classes; score buffers need at least this many slots.
 */
#define MURREID_NUM_DIALECTS 23

typedef enum MurreidStatus {
  MURREID_STATUS_OK = 0,
  MURREID_STATUS_NULL_POINTER = 1,
  MURREID_STATUS_INVALID_UTF8 = 2,
  MURREID_STATUS_IO = 3,
  /**
   * The file is not a readable bundle of a supported version.
   */
  MURREID_STATUS_FORMAT = 4,
  /**
   * A fusion model was called without audio.
   */
  MURREID_STATUS_AUDIO_REQUIRED = 5,
  MURREID_STATUS_INVALID_ARGUMENT = 6,
  MURREID_STATUS_INTERNAL = 7,
  MURREID_STATUS_PANIC = 8,
} MurreidStatus;

typedef enum MurreidModelKind {
  MURREID_MODEL_KIND_TEXT = 0,
  MURREID_MODEL_KIND_FUSION = 1,
} MurreidModelKind;

/**
 * Opaque handle to a loaded model bundle.
 */
typedef struct MurreidModel MurreidModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a bundle file. On success `*out` receives a handle that must be
 * released with [`murreid_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MurreidStatus murreid_model_load(const char *path, struct MurreidModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`murreid_model_load`] and not be used afterwards.
 */
void murreid_model_free(struct MurreidModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum MurreidStatus murreid_model_kind(const struct MurreidModel *model, enum MurreidModelKind *out);

/**
 * Classifies a transcript with optional mono audio.
 *
 * Pass `samples = NULL, n_samples = 0` for no audio; fusion models then fail
 * with `AUDIO_REQUIRED`. Samples are in [-1, 1] at `sample_rate_hz`. The
 * class probabilities are written to `scores_out`, which must hold at least
 * `MURREID_NUM_DIALECTS` values, and the predicted class index to
 * `label_out`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `transcript` must be
 * NUL-terminated.
 */
enum MurreidStatus murreid_predict(const struct MurreidModel *model,
                                   const char *transcript,
                                   const float *samples,
                                   size_t n_samples,
                                   uint32_t sample_rate_hz,
                                   double *scores_out,
                                   size_t n_scores,
                                   uint32_t *label_out);

/**
 * Dialect code (e.g. "EH") for a class index, or NULL when out of range.
 * The string is static.
 */
const char *murreid_label_code(uint32_t index);

/**
 * Dialect name for a class index, or NULL when out of range.
 */
const char *murreid_label_name(uint32_t index);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *murreid_last_error(void);

const char *murreid_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MURREID_H */
