#ifndef TWEMBED_FFI_H
#define TWEMBED_FFI_H

/* Generated by cbindgen from the twembed-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Non-zero values leave a human-readable
 * message retrievable via `tw_last_error` on the same thread.
 */
typedef enum TwStatus {
  TW_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TW_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TW_STATUS_INVALID_UTF8 = 2,
  /**
   * JSON or spec text could not be parsed.
   */
  TW_STATUS_PARSE_FAILED = 3,
  /**
   * Graph construction, embedding, or verification machinery failed.
   */
  TW_STATUS_BUILD_FAILED = 4,
  /**
   * Verification ran and found property violations.
   */
  TW_STATUS_VIOLATIONS = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  TW_STATUS_PANIC = 6,
} TwStatus;

/**
 * Embedding outcome handle: host graph, tree decomposition, and run stats.
 */
typedef struct TwEmbedding TwEmbedding;

/**
 * Edge-weighted graph handle.
 */
typedef struct TwGraph TwGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; never free it.
 */
const char *tw_last_error(void);

/**
 * Parse a graph from its JSON form.
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to a writable
 * pointer slot. On `Ok` the slot owns a new handle; free it with
 * `tw_graph_free`.
 */
enum TwStatus tw_graph_from_json(const char *json, struct TwGraph **out);

/**
 * Build a graph from a generator spec such as `grid:4,4,1` or
 * `random_planar:64`.
 *
 * # Safety
 * `spec` must point to a NUL-terminated string and `out` to a writable
 * pointer slot. On `Ok` the slot owns a new handle; free it with
 * `tw_graph_free`.
 */
enum TwStatus tw_graph_generate(const char *spec, uint64_t seed, struct TwGraph **out);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle from this library.
 */
size_t tw_graph_n(const struct TwGraph *g);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle from this library.
 */
size_t tw_graph_m(const struct TwGraph *g);

/**
 * Serialize a graph to JSON.
 *
 * # Safety
 * `g` must be a live handle and `out` a writable pointer slot. On `Ok` the
 * slot owns a new string; free it with `tw_string_free`.
 */
enum TwStatus tw_graph_to_json(const struct TwGraph *g, char **out);

/**
 * Release a graph handle. Null is a no-op.
 *
 * # Safety
 * `g` must be null or a handle not freed before.
 */
void tw_graph_free(struct TwGraph *g);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a string pointer returned by this library, not freed
 * before.
 */
void tw_string_free(char *s);

/**
 * Embed a graph into a low-treewidth host. The input is rescaled so its
 * smallest positive distance is 1 before embedding. `tau` of 0 derives the
 * cap from the sampled chain quality; any other value fixes it.
 *
 * # Safety
 * `g` must be a live graph handle and `out` a writable pointer slot. On
 * `Ok` the slot owns a new handle; free it with `tw_embedding_free`.
 */
enum TwStatus tw_embed(const struct TwGraph *g,
                       uint32_t r,
                       uint32_t psi,
                       size_t tau,
                       size_t tau_cap,
                       uint64_t seed,
                       struct TwEmbedding **out);

/**
 * Parse an embedding result from the JSON produced by
 * `tw_embedding_to_json` (or the CLI artifact payload under `result`).
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to a writable
 * pointer slot. On `Ok` the slot owns a new handle; free it with
 * `tw_embedding_free`.
 */
enum TwStatus tw_embedding_from_json(const char *json, struct TwEmbedding **out);

/**
 * Serialize an embedding result to JSON.
 *
 * # Safety
 * `e` must be a live handle and `out` a writable pointer slot. On `Ok` the
 * slot owns a new string; free it with `tw_string_free`.
 */
enum TwStatus tw_embedding_to_json(const struct TwEmbedding *e, char **out);

/**
 * Width of the host tree decomposition, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle from this library.
 */
size_t tw_embedding_width(const struct TwEmbedding *e);

/**
 * Deepest recursion level reached, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle from this library.
 */
size_t tw_embedding_depth(const struct TwEmbedding *e);

/**
 * Separator cap the run settled on, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle from this library.
 */
size_t tw_embedding_tau(const struct TwEmbedding *e);

/**
 * Check every definitional property of an embedding against its source
 * graph: decomposition validity, width bound, no contracted distance, depth
 * and potential accounting, boundary size. Returns `Ok` when clean,
 * `Violations` with the findings joined into the error message otherwise.
 * The graph is rescaled the same way `tw_embed` rescales it.
 *
 * # Safety
 * `g` and `e` must be live handles from this library.
 */
enum TwStatus tw_embedding_verify(const struct TwGraph *g, const struct TwEmbedding *e);

/**
 * Release an embedding handle. Null is a no-op.
 *
 * # Safety
 * `e` must be null or a handle not freed before.
 */
void tw_embedding_free(struct TwEmbedding *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWEMBED_FFI_H */
