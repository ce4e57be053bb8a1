#ifndef WHITEXT_H
#define WHITEXT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum WxStatus {
  WX_STATUS_OK = 0,
  WX_STATUS_NULL_POINTER = 1,
  WX_STATUS_INVALID_ARGUMENT = 2,
  WX_STATUS_PARSE = 3,
  WX_STATUS_COMPUTE = 4,
  WX_STATUS_BUFFER_TOO_SMALL = 5,
  WX_STATUS_PANIC = 6,
} WxStatus;

/**
 * An extension operator of fixed order.
 */
typedef struct WxExtension WxExtension;

/**
 * Values at every cell of a grid.
 */
typedef struct WxFunction WxFunction;

/**
 * A uniform grid.
 */
typedef struct WxGrid WxGrid;

/**
 * A rasterized set with its regularity constants.
 */
typedef struct WxSet WxSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *wx_last_error(void);

/**
 * Library version as a static string.
 */
const char *wx_version(void);

/**
 * Uniform grid on `[lo, hi]^n` with `cells` cells per axis.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum WxStatus wx_grid_new(size_t n, size_t cells, double lo, double hi, struct WxGrid **out);

/**
 * # Safety
 * `g` must come from `wx_grid_new` or be null.
 */
void wx_grid_free(struct WxGrid *g);

/**
 * Number of cells; 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
size_t wx_grid_len(const struct WxGrid *g);

/**
 * Cell size; NaN for a null handle.
 *
 * # Safety
 * `g` must be a live handle or null.
 */
double wx_grid_h(const struct WxGrid *g);

/**
 * Rasterizes a set spec given as JSON (`{"kind": "box", ...}`) and estimates
 * its regularity constants.
 *
 * # Safety
 * Pointers must be valid; `spec_json` NUL-terminated.
 */
enum WxStatus wx_set_new(const struct WxGrid *g, const char *spec_json, struct WxSet **out);

/**
 * # Safety
 * `s` must come from `wx_set_new` or be null.
 */
void wx_set_free(struct WxSet *s);

/**
 * Number of cells in the set; 0 for a null handle.
 *
 * # Safety
 * `s` must be a live handle or null.
 */
size_t wx_set_len(const struct WxSet *s);

/**
 * Regularity constants `theta` and `delta`.
 *
 * # Safety
 * `s` must be a live handle; outputs valid for writes.
 */
enum WxStatus wx_set_regularity(const struct WxSet *s, double *theta, double *delta);

/**
 * Function from `len` values in flat cell order; `len` must equal the cell
 * count.
 *
 * # Safety
 * `values` must point to `len` doubles.
 */
enum WxStatus wx_function_new(const struct WxGrid *g,
                              const double *values,
                              size_t len,
                              struct WxFunction **out);

/**
 * Corpus function from a JSON spec (`{"kind": "sine", "lambda": 1.0}`),
 * sampled on the grid of `s`.
 *
 * # Safety
 * Pointers must be valid; `spec_json` NUL-terminated.
 */
enum WxStatus wx_function_generate(const struct WxSet *s,
                                   const char *spec_json,
                                   struct WxFunction **out);

/**
 * # Safety
 * `f` must come from this library or be null.
 */
void wx_function_free(struct WxFunction *f);

/**
 * Copies the values into `buf`, which holds `cap` doubles. `len` receives
 * the cell count; `BufferTooSmall` if `cap` is short.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` valid for writes.
 */
enum WxStatus wx_function_values(const struct WxFunction *f, double *buf, size_t cap, size_t *len);

/**
 * Builds the order-`k` extension operator of `s`; `smoothness` is the bump
 * order (raised to at least `k`).
 *
 * # Safety
 * Pointers must be valid.
 */
enum WxStatus wx_extension_new(const struct WxSet *s,
                               size_t k,
                               size_t smoothness,
                               struct WxExtension **out);

/**
 * # Safety
 * `e` must come from `wx_extension_new` or be null.
 */
void wx_extension_free(struct WxExtension *e);

/**
 * Number of Whitney cubes; 0 for a null handle.
 *
 * # Safety
 * `e` must be a live handle or null.
 */
size_t wx_extension_cube_count(const struct WxExtension *e);

/**
 * Extends `f` (read on the set only) to the whole grid.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WxStatus wx_extension_apply(const struct WxExtension *e,
                                 const struct WxFunction *f,
                                 struct WxFunction **out);

/**
 * Intrinsic functional of `f` on `s` for `space` in
 * `{"sobolev", "tl", "besov"}` and parameters `(s, k, p, q, u)`; pass
 * `INFINITY` for infinite exponents.
 *
 * # Safety
 * Pointers must be valid; `space` NUL-terminated.
 */
enum WxStatus wx_trace_norm(const struct WxFunction *f,
                            const struct WxSet *s,
                            const char *space,
                            double smooth,
                            size_t k,
                            double p,
                            double q,
                            double u,
                            double *value);

/**
 * Runs the verification harness on a TOML config and returns the JSON
 * report in `*report` (release with `wx_string_free`). `*failed` receives
 * the number of failed checks.
 *
 * # Safety
 * Pointers must be valid; `config_toml` NUL-terminated.
 */
enum WxStatus wx_verify(const char *config_toml, char **report, size_t *failed);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void wx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WHITEXT_H */
