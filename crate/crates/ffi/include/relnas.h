#ifndef RELNAS_H
#define RELNAS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelnasStatus {
  RELNAS_STATUS_OK = 0,
  RELNAS_STATUS_NULL_ARGUMENT = 1,
  /**
   * Malformed vector, genotype or string argument.
   */
  RELNAS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Output buffer too small; the required length is reported.
   */
  RELNAS_STATUS_BUFFER_TOO_SMALL = 3,
  RELNAS_STATUS_CONFIG = 4,
  RELNAS_STATUS_EVALUATION = 5,
  RELNAS_STATUS_IO = 6,
  /**
   * The search already ran all its generations.
   */
  RELNAS_STATUS_FINISHED = 7,
  RELNAS_STATUS_PANIC = 8,
} RelnasStatus;

/**
 * An in-progress search.
 */
typedef struct RelnasSearch RelnasSearch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *relnas_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be freed twice.
 */
void relnas_string_free(char *s);

/**
 * Decodes `len` genes (`8 * blocks_per_cell` of them) into canonical genotype JSON.
 *
 * # Safety
 * `genes` must point to `len` readable doubles; `json_out` must be writable.
 */
enum RelnasStatus relnas_decode(const double *genes,
                                size_t len,
                                size_t blocks_per_cell,
                                char **json_out);

/**
 * Encodes genotype JSON to its midpoint vector. Writes up to `capacity`
 * genes and always stores the full length in `len_out`; a short buffer
 * yields `BufferTooSmall`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `genes_out` must have room for
 * `capacity` doubles (it may be null when `capacity` is 0); `len_out` must be writable.
 */
enum RelnasStatus relnas_encode(const char *json,
                                double *genes_out,
                                size_t capacity,
                                size_t *len_out);

/**
 * Starts a search from TOML config text (the same format the command line
 * reads). Nothing is written to disk.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum RelnasStatus relnas_search_new(const char *config_toml, struct RelnasSearch **out);

/**
 * Runs one generation. Reports the completed generation number and that
 * generation's lowest loss (either pointer may be null).
 *
 * # Safety
 * `search` must be a live handle from [`relnas_search_new`].
 */
enum RelnasStatus relnas_search_step(struct RelnasSearch *search,
                                     size_t *generation_out,
                                     double *min_loss_out);

/**
 * Generations completed so far.
 *
 * # Safety
 * `search` must be a live handle; `out` must be writable.
 */
enum RelnasStatus relnas_search_generation(const struct RelnasSearch *search, size_t *out);

/**
 * Best estimate so far and its genotype JSON (free with [`relnas_string_free`]).
 * Before the first generation this fails with `InvalidArgument`.
 *
 * # Safety
 * `search` must be a live handle; `loss_out` and `json_out` must be writable.
 */
enum RelnasStatus relnas_search_best(const struct RelnasSearch *search,
                                     double *loss_out,
                                     char **json_out);

/**
 * Releases a search handle. Null is ignored.
 *
 * # Safety
 * `search` must come from [`relnas_search_new`] and must not be used afterwards.
 */
void relnas_search_free(struct RelnasSearch *search);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELNAS_H */
