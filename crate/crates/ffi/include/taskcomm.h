#ifndef TASKCOMM_H
#define TASKCOMM_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Complex symbols in one semantic feature frame.
 */
#define TC_SYMBOLS_PER_FRAME 4840

/**
 * Bytes in one 16-frame RGB segment (16 × 112 × 112 × 3).
 */
#define TC_SEGMENT_BYTES 602112

#define TC_NUM_ACTIVITIES 5

#define TC_NUM_POSTURES 4

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_IO = 3,
  /**
   * Bad magic, version, truncation or layout in a SEMW file.
   */
  TC_STATUS_FORMAT = 4,
  TC_STATUS_SHAPE = 5,
  TC_STATUS_CHANNEL = 6,
  TC_STATUS_CONTROLLER = 7,
  TC_STATUS_TRAINING = 8,
  TC_STATUS_PANIC = 99,
} TcStatus;

/**
 * Opaque video codec model.
 */
typedef struct TcCodec TcCodec;

/**
 * Opaque transmission controller.
 */
typedef struct TcController TcController;

/**
 * Opaque posture random forest.
 */
typedef struct TcForest TcForest;

/**
 * A validated postural transition. Posture codes: 0 lying, 1 sitting,
 * 2 standing, 3 walking.
 */
typedef struct TcAckEvent {
  size_t t;
  uint32_t from;
  uint32_t to;
} TcAckEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or NULL if the
 * last call succeeded. Valid until the next call on the same thread.
 */
const char *tc_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *tc_status_name(enum TcStatus status);

/**
 * Symbols to stream every segment: `l · n_f` (saturating).
 */
uint64_t tc_overhead_c_sc(uint64_t l, uint64_t n_f);

/**
 * Symbols to send only ACK-triggered segments: `l · n_t` (saturating).
 */
uint64_t tc_overhead_c_tc(uint64_t l, uint64_t n_t);

/**
 * Channel uses for `n_b` bits at capacity `log2(1 + SNR)`.
 */
double tc_overhead_c_mpeg(uint64_t n_b, double snr_db);

/**
 * `1 − c_tc / c_sc`; fails when `c_sc` is zero.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum TcStatus tc_overhead_reduction(uint64_t c_tc, uint64_t c_sc, double *out);

/**
 * Mean cosine between each column of a window and the default gravity
 * direction. `xyz` holds `n_columns` interleaved `(x, y, z)` triples.
 *
 * # Safety
 * `xyz` must point to `3 · n_columns` doubles; `out_u` must be writable.
 */
enum TcStatus tc_gravity_feature(const double *xyz, size_t n_columns, double *out_u);

/**
 * Sends `n_symbols` interleaved `(re, im)` symbols through an AWGN channel
 * at `snr_db` relative to their average power. Pass `INFINITY` for a
 * noiseless link. `out` may alias `symbols`.
 *
 * # Safety
 * `symbols` and `out` must each hold `2 · n_symbols` doubles.
 */
enum TcStatus tc_channel_transmit(const double *symbols,
                                  size_t n_symbols,
                                  double snr_db,
                                  uint64_t seed,
                                  double *out);

/**
 * Creates a controller that accepts a posture change after
 * `validation_windows` consecutive windows and broadcasts to all cameras.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum TcStatus tc_controller_new(size_t validation_windows, struct TcController **out);

/**
 * Feeds the posture classified for window `window_index`. Window indices
 * must be consecutive. `*fired` is set to whether an ACK was issued and,
 * if so, `*event` describes it.
 *
 * # Safety
 * `controller` must come from [`tc_controller_new`]; `event` and `fired`
 * must be writable.
 */
enum TcStatus tc_controller_observe(struct TcController *controller,
                                    uint32_t posture_code,
                                    size_t window_index,
                                    struct TcAckEvent *event,
                                    bool *fired);

/**
 * # Safety
 * `controller` must come from [`tc_controller_new`] or be NULL.
 */
void tc_controller_free(struct TcController *controller);

/**
 * Fits a forest on `n` labelled orientation features.
 *
 * # Safety
 * `u` and `labels` must hold `n` values; `out` must be writable.
 */
enum TcStatus tc_forest_train(const double *u,
                              const uint32_t *labels,
                              size_t n,
                              size_t n_trees,
                              size_t max_depth,
                              uint64_t seed,
                              struct TcForest **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TcStatus tc_forest_load(const char *path, struct TcForest **out);

/**
 * # Safety
 * `forest` must be a live handle; `path` a NUL-terminated string.
 */
enum TcStatus tc_forest_save(const struct TcForest *forest, const char *path);

/**
 * Plurality vote of the forest for feature `u`, as a posture code.
 *
 * # Safety
 * `forest` must be a live handle; `out_code` must be writable.
 */
enum TcStatus tc_forest_classify(const struct TcForest *forest, double u, uint32_t *out_code);

/**
 * # Safety
 * `forest` must come from this library or be NULL.
 */
void tc_forest_free(struct TcForest *forest);

/**
 * Untrained codec with seeded weights.
 *
 * # Safety
 * `out` must be writable.
 */
enum TcStatus tc_codec_init(uint64_t seed, struct TcCodec **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TcStatus tc_codec_load(const char *path, struct TcCodec **out);

/**
 * Encodes one segment (`TC_SEGMENT_BYTES` bytes: 16 frames of 112×112
 * interleaved RGB) into `TC_SYMBOLS_PER_FRAME` unit-power symbols written
 * as interleaved `(re, im)` pairs, plus the normalization gain.
 *
 * # Safety
 * `pixels` must hold `len` bytes, `out_symbols` `2 · TC_SYMBOLS_PER_FRAME`
 * doubles; `out_gain` must be writable.
 */
enum TcStatus tc_codec_encode(const struct TcCodec *codec,
                              const uint8_t *pixels,
                              size_t len,
                              double *out_symbols,
                              double *out_gain);

/**
 * Decodes received symbols (interleaved, with the transmitter's gain) into
 * five activity logits and the winning activity code (0 sleeping,
 * 1 resting, 2 dress-up, 3 eating, 4 calling).
 *
 * # Safety
 * `symbols` must hold `2 · n_symbols` doubles, `out_logits`
 * `TC_NUM_ACTIVITIES` doubles; `out_activity` must be writable.
 */
enum TcStatus tc_codec_decode(const struct TcCodec *codec,
                              const double *symbols,
                              size_t n_symbols,
                              double gain,
                              double *out_logits,
                              uint32_t *out_activity);

/**
 * # Safety
 * `codec` must come from this library or be NULL.
 */
void tc_codec_free(struct TcCodec *codec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TASKCOMM_H */
