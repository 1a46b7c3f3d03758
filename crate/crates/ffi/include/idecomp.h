#ifndef IDECOMP_H
#define IDECOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IdecompStatus {
  IDECOMP_STATUS_OK = 0,
  IDECOMP_STATUS_NULL_POINTER = 1,
  IDECOMP_STATUS_ARGUMENT = 2,
  IDECOMP_STATUS_VALIDATION = 3,
  IDECOMP_STATUS_SHAPE = 4,
  IDECOMP_STATUS_NUMERICAL = 5,
  IDECOMP_STATUS_DIVERGENCE = 6,
  IDECOMP_STATUS_PARSE = 7,
  IDECOMP_STATUS_IO = 8,
  IDECOMP_STATUS_PANIC = 9,
} IdecompStatus;

/**
 * Per-layer parameter bundle of the unrolled network.
 */
typedef struct IdecompBundle IdecompBundle;

/**
 * Dense row-major `height x width` grid of doubles.
 */
typedef struct IdecompGrid IdecompGrid;

/**
 * Output of a decomposition: the two layers and the objective per iteration/layer.
 */
typedef struct IdecompResult IdecompResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *idecomp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *idecomp_version(void);

/**
 * Copies `height * width` row-major values into a new grid.
 *
 * # Safety
 * `data` must point to `height * width` readable doubles; `out` must be writable.
 */
enum IdecompStatus idecomp_grid_new(size_t height,
                                    size_t width,
                                    const double *data,
                                    struct IdecompGrid **out);

/**
 * # Safety
 * `grid` must be NULL or a handle from this library not yet freed.
 */
void idecomp_grid_free(struct IdecompGrid *grid);

/**
 * # Safety
 * `grid` must be a live grid handle.
 */
size_t idecomp_grid_height(const struct IdecompGrid *grid);

/**
 * # Safety
 * `grid` must be a live grid handle.
 */
size_t idecomp_grid_width(const struct IdecompGrid *grid);

/**
 * Copies the row-major values into `dest`, which must hold `len` doubles;
 * `len` must equal height * width.
 *
 * # Safety
 * `grid` must be a live grid handle and `dest` must have room for `len` doubles.
 */
enum IdecompStatus idecomp_grid_copy(const struct IdecompGrid *grid, double *dest, size_t len);

/**
 * Runs the iterative solver with the `diff:M,R` kernel bank, where `M` is
 * `n_alphas`. `paper_e2` selects the uncorrected v-block coefficient.
 *
 * # Safety
 * `image` must be a live grid handle, `alphas` must point to `n_alphas`
 * doubles and `out` must be writable.
 */
enum IdecompStatus idecomp_admm_decompose(const struct IdecompGrid *image,
                                          const double *alphas,
                                          size_t n_alphas,
                                          size_t radius,
                                          double beta,
                                          double r_p,
                                          double r_q,
                                          bool paper_e2,
                                          size_t max_iters,
                                          struct IdecompResult **out);

/**
 * Forward pass of the unrolled network.
 *
 * # Safety
 * `image` and `bundle` must be live handles and `out` must be writable.
 */
enum IdecompStatus idecomp_unroll_forward(const struct IdecompGrid *image,
                                          const struct IdecompBundle *bundle,
                                          struct IdecompResult **out);

/**
 * Borrowed view of the smooth layer; valid while `result` lives.
 *
 * # Safety
 * `result` must be a live result handle.
 */
const struct IdecompGrid *idecomp_result_u(const struct IdecompResult *result);

/**
 * Borrowed view of the feature layer; valid while `result` lives.
 *
 * # Safety
 * `result` must be a live result handle.
 */
const struct IdecompGrid *idecomp_result_v(const struct IdecompResult *result);

/**
 * Number of iterations (solver) or layers (network) that ran.
 *
 * # Safety
 * `result` must be a live result handle.
 */
size_t idecomp_result_steps(const struct IdecompResult *result);

/**
 * Objective after step `index` (0-based), or NaN when out of range.
 *
 * # Safety
 * `result` must be a live result handle.
 */
double idecomp_result_objective(const struct IdecompResult *result, size_t index);

/**
 * # Safety
 * `result` must be NULL or a handle from this library not yet freed.
 */
void idecomp_result_free(struct IdecompResult *result);

/**
 * Default bundle with `width` kernels per layer, `depth` layers and kernel radius `radius`.
 *
 * # Safety
 * `out` must be writable.
 */
enum IdecompStatus idecomp_bundle_init_default(size_t width,
                                               size_t depth,
                                               size_t radius,
                                               struct IdecompBundle **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
enum IdecompStatus idecomp_bundle_load(const char *path, struct IdecompBundle **out);

/**
 * # Safety
 * `bundle` must be a live handle and `path` a NUL-terminated string.
 */
enum IdecompStatus idecomp_bundle_save(const struct IdecompBundle *bundle, const char *path);

/**
 * Number of layers.
 *
 * # Safety
 * `bundle` must be a live handle.
 */
size_t idecomp_bundle_depth(const struct IdecompBundle *bundle);

/**
 * Kernels per layer.
 *
 * # Safety
 * `bundle` must be a live handle.
 */
size_t idecomp_bundle_width(const struct IdecompBundle *bundle);

/**
 * # Safety
 * `bundle` must be NULL or a handle from this library not yet freed.
 */
void idecomp_bundle_free(struct IdecompBundle *bundle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IDECOMP_H */
