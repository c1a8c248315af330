/* C ABI for the qadam optimizer and wire codec. Generated; do not edit. */

#ifndef QADAM_H
#define QADAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum QadamStatus {
  QadamStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  QadamStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  QadamStatus_InvalidUtf8 = 2,
  /**
   * Invalid configuration (bad hyperparameter, schedule, or quantizer).
   */
  QadamStatus_Config = 3,
  /**
   * Numeric domain error (non-finite input, division by zero).
   */
  QadamStatus_Domain = 4,
  /**
   * Length mismatch between buffers.
   */
  QadamStatus_Shape = 5,
  /**
   * A recorded trace failed verification.
   */
  QadamStatus_Verification = 6,
  /**
   * I/O failure.
   */
  QadamStatus_Io = 7,
  /**
   * Malformed wire frame.
   */
  QadamStatus_Format = 8,
  /**
   * Frame or payload failed integrity checks.
   */
  QadamStatus_Corruption = 9,
  /**
   * Parameter-server protocol violation.
   */
  QadamStatus_Protocol = 10,
  /**
   * The output buffer was too small; re-query the required size.
   */
  QadamStatus_BufferTooSmall = 11,
  /**
   * An internal panic was caught at the FFI boundary.
   */
  QadamStatus_Panic = 12,
} QadamStatus;

/**
 * Opaque single-machine quantized-Adam optimizer.
 */
typedef struct QadamOptimizer QadamOptimizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message for the most recent failure on this thread into `buf`
 * (NUL-terminated, truncated to fit) and returns the full message length in
 * bytes, excluding the terminator. Call with a null `buf` to query the
 * length. A zero return means no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to at least `buf_len` writable bytes.
 */
uintptr_t qadam_last_error_message(char *buf, uintptr_t buf_len);

/**
 * Creates an optimizer handle.
 *
 * `schedule` is one of `"decay_sqrt_t"`, `"fixed_horizon:T"`,
 * `"epoch_halving:P"`; `quantizer` is `"fp"`, `"ternary"`, or a bit width
 * (`"2"` to `"16"`). `error_feedback` nonzero keeps the residual between
 * steps. On success `*out` owns the handle.
 *
 * # Safety
 * `schedule` and `quantizer` must be NUL-terminated strings; `out` must be a
 * valid pointer.
 */
enum QadamStatus qadam_optimizer_new(uintptr_t dim,
                                     double alpha,
                                     double beta,
                                     double theta,
                                     double epsilon,
                                     const char *schedule,
                                     const char *quantizer,
                                     int32_t error_feedback,
                                     struct QadamOptimizer **out);

/**
 * One optimizer step: reads the iterate `x` and gradient `g` (both `len`
 * doubles) and writes the next iterate to `x_next` (also `len` doubles;
 * in-place `x_next == x` is allowed). `len` must equal the handle's
 * dimension.
 *
 * # Safety
 * `opt` must be a live handle from `qadam_optimizer_new`; the three buffers
 * must each hold `len` doubles.
 */
enum QadamStatus qadam_optimizer_step(struct QadamOptimizer *opt,
                                      const double *x,
                                      const double *g,
                                      uintptr_t len,
                                      double *x_next);

/**
 * Writes the l2 norm of the current error-feedback residual to `out`.
 *
 * # Safety
 * `opt` must be a live handle; `out` must be a valid pointer.
 */
enum QadamStatus qadam_optimizer_error_norm(const struct QadamOptimizer *opt, double *out);

/**
 * Releases an optimizer handle. Null is a no-op.
 *
 * # Safety
 * `opt` must be null or a handle from `qadam_optimizer_new` not yet freed.
 */
void qadam_optimizer_free(struct QadamOptimizer *opt);

/**
 * Total wire-frame size in bits for `len` coordinates at bit width `k`.
 */
uint64_t qadam_frame_bits(uintptr_t len, uint8_t k);

/**
 * Quantizes `x` (`len` doubles) on the k-bit midpoint grid and encodes the
 * wire frame into `buf`. Writes the frame size in bytes to `*written`. Pass
 * a null `buf` to query the size without encoding.
 *
 * # Safety
 * `x` must hold `len` doubles; `buf` must be null or hold `buf_len` bytes;
 * `written` must be a valid pointer.
 */
enum QadamStatus qadam_quantize_encode(const double *x,
                                       uintptr_t len,
                                       uint8_t k,
                                       uint8_t *buf,
                                       uintptr_t buf_len,
                                       uintptr_t *written);

/**
 * Decodes a wire frame and writes the dequantized coordinates to `out`.
 * Writes the coordinate count to `*written`. Pass a null `out` to query the
 * count without decoding into a buffer.
 *
 * # Safety
 * `frame` must hold `frame_len` bytes; `out` must be null or hold `out_len`
 * doubles; `written` must be a valid pointer.
 */
enum QadamStatus qadam_decode_dequantize(const uint8_t *frame,
                                         uintptr_t frame_len,
                                         double *out,
                                         uintptr_t out_len,
                                         uintptr_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QADAM_H */
