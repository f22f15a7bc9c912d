#ifndef VKROD_H
#define VKROD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 3 to 9 match the exit statuses of the command-line tool.
 */
typedef enum VkrodStatus {
  VKROD_STATUS_OK = 0,
  VKROD_STATUS_NULL_POINTER = 1,
  VKROD_STATUS_INVALID_ARGUMENT = 2,
  VKROD_STATUS_CONFIG = 3,
  VKROD_STATUS_IO = 4,
  VKROD_STATUS_MESH = 5,
  VKROD_STATUS_CELL = 6,
  VKROD_STATUS_ROD = 7,
  VKROD_STATUS_DYNAMICS = 8,
  VKROD_STATUS_RESCALE = 9,
  VKROD_STATUS_PANIC = 10,
} VkrodStatus;

typedef enum VkrodShape {
  VKROD_SHAPE_DISK = 0,
  VKROD_SHAPE_SQUARE = 1,
  VKROD_SHAPE_RECTANGLE = 2,
} VkrodShape;

/**
 * Solved cross-section: effective stiffness and section moments.
 */
typedef struct VkrodCell VkrodCell;

/**
 * Area moments of the normalized section.
 */
typedef struct VkrodGeometry {
  double area;
  double i2;
  double i3;
  double mu_s;
} VkrodGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *vkrod_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next call into the library.
 */
const char *vkrod_last_error(void);

/**
 * Solves the cell problem of a built-in section with an isotropic material.
 * `aspect` is only read for rectangles.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum VkrodStatus vkrod_cell_from_shape(enum VkrodShape shape,
                                       size_t resolution,
                                       double aspect,
                                       double lambda,
                                       double mu,
                                       struct VkrodCell **out);

/**
 * Solves the cell problem described by the `material` and `section` blocks of a JSON configuration.
 *
 * # Safety
 * `config_path` must be null or a nul-terminated string; `out` as in [`vkrod_cell_from_shape`].
 */
enum VkrodStatus vkrod_cell_from_config(const char *config_path, struct VkrodCell **out);

/**
 * Releases a cell. Null is ignored.
 *
 * # Safety
 * `cell` must be null or a handle returned by this library that has not been freed.
 */
void vkrod_cell_free(struct VkrodCell *cell);

/**
 * Writes the 4×4 effective stiffness over `(r, κ₂, κ₃, τ)` row-major into `out[16]`.
 *
 * # Safety
 * `cell` must be a live handle or null; `out` must be null or hold 16 doubles.
 */
enum VkrodStatus vkrod_cell_stiffness(const struct VkrodCell *cell, double *out);

/**
 * # Safety
 * `cell` must be a live handle or null; `out` must be null or writable.
 */
enum VkrodStatus vkrod_cell_geometry(const struct VkrodCell *cell, struct VkrodGeometry *out);

/**
 * Lowest `count` squared frequencies of the clamped rod linearized at rest, ascending.
 *
 * # Safety
 * `cell` must be a live handle or null; `out` must be null or hold `count` doubles.
 */
enum VkrodStatus vkrod_rod_spectrum(const struct VkrodCell *cell,
                                    double length,
                                    size_t n_elem,
                                    size_t count,
                                    double *out);

/**
 * Runs the dynamics pipeline of a configuration: writes the trajectory CSV to `out_path` and
 * the energy ledger next to it.
 *
 * # Safety
 * Both arguments must be null or nul-terminated strings.
 */
enum VkrodStatus vkrod_run(const char *config_path, const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VKROD_H */
