#ifndef CDP_H
#define CDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdpMethod {
  CDP_METHOD_CDP = 0,
  CDP_METHOD_ACT = 1,
  CDP_METHOD_ACTM = 2,
} CdpMethod;

typedef enum CdpStatus {
  CDP_STATUS_OK = 0,
  CDP_STATUS_NULL_POINTER = 1,
  CDP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input data violates a precondition (weights, symmetry, sizes).
   */
  CDP_STATUS_INVALID_INPUT = 3,
  /**
   * A snapshot or shape carries no information, e.g. an edgeless graph.
   */
  CDP_STATUS_DEGENERATE = 4,
  CDP_STATUS_IO = 5,
  CDP_STATUS_PARSE = 6,
  /**
   * No scores exist for the requested time index.
   */
  CDP_STATUS_OUT_OF_RANGE = 7,
  /**
   * The buffer is too small; the required length was still written.
   */
  CDP_STATUS_BUFFER_TOO_SMALL = 8,
  CDP_STATUS_PANIC = 99,
} CdpStatus;

/**
 * Opaque detection result.
 */
typedef struct CdpResult CdpResult;

/**
 * Opaque snapshot sequence.
 */
typedef struct CdpSequence CdpSequence;

typedef struct CdpDetectOptions {
  enum CdpMethod method;
  size_t window;
  double epsilon;
  double threshold;
  uint64_t seed;
} CdpDetectOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cdp_version(void);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cdp_last_error_message(void);

struct CdpDetectOptions cdp_detect_options_default(void);

/**
 * Empty sequence over `n` vertices.
 */
enum CdpStatus cdp_sequence_new(size_t n, struct CdpSequence **out);

/**
 * Appends snapshot `t` from a row-major `n * n` weight array. Time indices
 * must increase.
 */
enum CdpStatus cdp_sequence_push_dense(struct CdpSequence *seq,
                                       size_t t,
                                       const double *weights,
                                       size_t len);

/**
 * Reads an edge-list file. `n = 0` infers the vertex count.
 */
enum CdpStatus cdp_sequence_load_edge_list(const char *path, size_t n, struct CdpSequence **out);

/**
 * Draws a reference scenario. `change_type` is `"point"` or `"interval"`
 * with the change starting at `change_time` (an interval runs to `t_len`);
 * `scale <= 0` keeps the full block sizes.
 */
enum CdpStatus cdp_sequence_simulate(const char *scenario,
                                     const char *change_type,
                                     size_t t_len,
                                     size_t change_time,
                                     double scale,
                                     uint64_t seed,
                                     struct CdpSequence **out);

enum CdpStatus cdp_sequence_len(const struct CdpSequence *seq, size_t *len);

enum CdpStatus cdp_sequence_vertex_count(const struct CdpSequence *seq, size_t *n);

/**
 * 0-based changed vertices of a simulated sequence.
 */
enum CdpStatus cdp_sequence_changed_vertices(const struct CdpSequence *seq,
                                             size_t *buf,
                                             size_t cap,
                                             size_t *len);

void cdp_sequence_free(struct CdpSequence *seq);

/**
 * Scores every instant after the first `window`. Null `options` uses
 * [`cdp_detect_options_default`].
 */
enum CdpStatus cdp_detect(const struct CdpSequence *seq,
                          const struct CdpDetectOptions *options,
                          struct CdpResult **out);

/**
 * First and last scored time index.
 */
enum CdpStatus cdp_result_time_range(const struct CdpResult *res, size_t *first_t, size_t *last_t);

enum CdpStatus cdp_result_vertex_count(const struct CdpResult *res, size_t *n);

/**
 * Raw change scores at `t`.
 */
enum CdpStatus cdp_result_scores(const struct CdpResult *res,
                                 size_t t,
                                 double *buf,
                                 size_t cap,
                                 size_t *len);

/**
 * Standardized scores at `t`.
 */
enum CdpStatus cdp_result_zscores(const struct CdpResult *res,
                                  size_t t,
                                  double *buf,
                                  size_t cap,
                                  size_t *len);

/**
 * Per-vertex 0/1 detection flags at `t`.
 */
enum CdpStatus cdp_result_detected(const struct CdpResult *res,
                                   size_t t,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *len);

/**
 * Embedding dimension chosen at `t`; CDP results only.
 */
enum CdpStatus cdp_result_dim(const struct CdpResult *res, size_t t, size_t *d);

void cdp_result_free(struct CdpResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDP_H */
