#ifndef FBWAVE_H
#define FBWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Samples per feature frame.
 */
#define FBW_HOP 128

/**
 * Output sample rate in Hz.
 */
#define FBW_SAMPLE_RATE 24000

typedef enum FbwStatus {
  FBW_STATUS_OK = 0,
  FBW_STATUS_NULL_POINTER = 1,
  FBW_STATUS_INVALID_INPUT = 2,
  FBW_STATUS_BUFFER_TOO_SMALL = 3,
  FBW_STATUS_IO = 4,
  FBW_STATUS_LOAD = 5,
  FBW_STATUS_SINGULAR = 6,
  FBW_STATUS_STREAM_CLOSED = 7,
  FBW_STATUS_PANIC = 8,
} FbwStatus;

/**
 * Loaded model weights.
 */
typedef struct FbwModel FbwModel;

/**
 * Streaming synthesis state; keeps its model alive.
 */
typedef struct FbwStream FbwStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *fbw_last_error(void);

/**
 * Loads a weight file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbwStatus fbw_model_load(const char *path, struct FbwModel **out);

/**
 * Decodes weights from memory.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` be valid.
 */
enum FbwStatus fbw_model_from_bytes(const uint8_t *bytes, size_t len, struct FbwModel **out);

/**
 * # Safety
 * `model` must come from a load function and not be used afterwards.
 */
void fbw_model_free(struct FbwModel *model);

/**
 * Feature values per frame, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t fbw_model_feature_dim(const struct FbwModel *model);

/**
 * Offline synthesis of `frames` frames (row-major, `frames * feature_dim`
 * floats) into `out`, which must hold `frames * FBW_HOP` samples.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum FbwStatus fbw_synthesize(const struct FbwModel *model,
                              const float *features_ptr,
                              size_t frames,
                              uint64_t seed,
                              double temperature,
                              float *out,
                              size_t out_len);

/**
 * Log-likelihood of `samples` audio samples (normalising constants
 * included).
 *
 * # Safety
 * Pointers must be valid for the stated lengths; outputs may be null.
 */
enum FbwStatus fbw_log_likelihood(const struct FbwModel *model,
                                  const float *audio,
                                  size_t samples,
                                  const float *features_ptr,
                                  size_t frames,
                                  double *total,
                                  double *per_dim);

/**
 * Multiply-accumulates per second of audio for the model's config.
 *
 * # Safety
 * `model` must be live and `out` valid.
 */
enum FbwStatus fbw_count_macs(const struct FbwModel *model, double *out);

/**
 * Opens a stream. The stream holds its own reference to the weights.
 *
 * # Safety
 * `model` must be live and `out` valid.
 */
enum FbwStatus fbw_stream_open(const struct FbwModel *model,
                               uint64_t seed,
                               double temperature,
                               struct FbwStream **out);

/**
 * Pushes `frames` feature frames and writes `frames * FBW_HOP` samples.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum FbwStatus fbw_stream_push(struct FbwStream *stream,
                               const float *features_ptr,
                               size_t frames,
                               float *out,
                               size_t out_len);

/**
 * Closes a stream (idempotent) and reports its counters.
 *
 * # Safety
 * `stream` must be live; outputs may be null.
 */
enum FbwStatus fbw_stream_close(struct FbwStream *stream, uint64_t *samples, uint64_t *frames);

/**
 * # Safety
 * `stream` must come from [`fbw_stream_open`] and not be used afterwards.
 */
void fbw_stream_free(struct FbwStream *stream);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBWAVE_H */
