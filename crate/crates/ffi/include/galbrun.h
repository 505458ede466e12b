#ifndef GALBRUN_H
#define GALBRUN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GalbrunStatus {
  GALBRUN_STATUS_OK = 0,
  GALBRUN_STATUS_NULL_POINTER = 1,
  GALBRUN_STATUS_INVALID_ARGUMENT = 2,
  GALBRUN_STATUS_UNSUPPORTED_DEGREE = 3,
  GALBRUN_STATUS_SINGULAR_MATRIX = 4,
  GALBRUN_STATUS_SIZE_LIMIT = 5,
  GALBRUN_STATUS_IO = 6,
  GALBRUN_STATUS_PANIC = 7,
  GALBRUN_STATUS_INTERNAL = 8,
} GalbrunStatus;

typedef enum GalbrunMethod {
  /**
   * H1-conforming
   */
  GALBRUN_METHOD_M1 = 1,
  /**
   * Taylor-Hood with pseudo-pressure
   */
  GALBRUN_METHOD_M2 = 2,
  /**
   * H(div)-conforming BDM
   */
  GALBRUN_METHOD_M3 = 3,
  /**
   * Fully discontinuous
   */
  GALBRUN_METHOD_M4 = 4,
} GalbrunMethod;

typedef enum GalbrunProblem {
  /**
   * Manufactured rotating solution, `c_s^2 = 1`
   */
  GALBRUN_PROBLEM_CONVERGENCE = 0,
  /**
   * Divergence-free solution with the given `c_s^2`
   */
  GALBRUN_PROBLEM_LOCKING = 1,
  /**
   * Gradient forcing with the given `c_s^2`, no exact solution
   */
  GALBRUN_PROBLEM_GRADROB = 2,
} GalbrunProblem;

/**
 * Opaque mesh handle.
 */
typedef struct GalbrunMesh GalbrunMesh;

/**
 * Opaque discrete solution handle.
 */
typedef struct GalbrunSolution GalbrunSolution;

typedef struct GalbrunErrorNorms {
  double l2_error;
  double xh_error;
  double l2_norm;
} GalbrunErrorNorms;

typedef struct GalbrunDiagnostics {
  double c_bh;
  /**
   * `(c_bh - 1) / (c_bh + 1)`; meaningful only when `has_c_hat` is 1.
   */
  double c_hat;
  uint8_t has_c_hat;
  size_t kernel_dim;
  size_t complement_dim;
  size_t dim;
} GalbrunDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *galbrun_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *galbrun_version(void);

/**
 * Unit-disc mesh after `level` red refinements with boundary geometry of
 * order `geom_order >= 1`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GalbrunStatus galbrun_mesh_new_disc(size_t level, size_t geom_order, struct GalbrunMesh **out);

/**
 * Unit-square mesh of `n x n` cells split into triangles.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GalbrunStatus galbrun_mesh_new_square(size_t n, struct GalbrunMesh **out);

/**
 * Releases a mesh. Null is ignored.
 *
 * # Safety
 * `mesh` must be null or a handle returned by a `galbrun_mesh_new_*` call
 * that has not been freed.
 */
void galbrun_mesh_free(struct GalbrunMesh *mesh);

/**
 * Triangle, vertex and facet counts and the mesh size `h`.
 *
 * # Safety
 * `mesh` must be a live handle; each output pointer may be null.
 */
enum GalbrunStatus galbrun_mesh_info(const struct GalbrunMesh *mesh,
                                     size_t *num_triangles,
                                     size_t *num_vertices,
                                     size_t *num_facets,
                                     double *h);

/**
 * Assembles and solves one method of degree `p` for a built-in problem on
 * a disc mesh. `cs2` is ignored by the convergence problem.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid storage for one handle.
 */
enum GalbrunStatus galbrun_solve(const struct GalbrunMesh *mesh,
                                 enum GalbrunMethod method,
                                 size_t p,
                                 enum GalbrunProblem problem,
                                 double cs2,
                                 struct GalbrunSolution **out);

/**
 * Releases a solution. Null is ignored.
 *
 * # Safety
 * `solution` must be null or a live handle from [`galbrun_solve`].
 */
void galbrun_solution_free(struct GalbrunSolution *solution);

/**
 * Number of unknowns of the solved system (velocity plus pseudo-pressure).
 *
 * # Safety
 * `solution` must be a live handle and `out` valid.
 */
enum GalbrunStatus galbrun_solution_ndof(const struct GalbrunSolution *solution, size_t *out);

/**
 * Error norms against the exact solution. Without one (gradient problem)
 * the errors are taken against zero, so `l2_error == l2_norm`.
 *
 * # Safety
 * `solution` must be a live handle and `out` valid.
 */
enum GalbrunStatus galbrun_solution_error_norms(const struct GalbrunSolution *solution,
                                                struct GalbrunErrorNorms *out);

/**
 * Whether the solved problem has a known exact solution (1) or not (0).
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
uint8_t galbrun_solution_has_exact(const struct GalbrunSolution *solution);

/**
 * Velocity at the physical point `(x, y)`, written to `out[0..2]`.
 *
 * # Safety
 * `solution` must be a live handle and `out` point to two doubles.
 */
enum GalbrunStatus galbrun_solution_eval(const struct GalbrunSolution *solution,
                                         double x,
                                         double y,
                                         double *out);

/**
 * Dense stability constants of `method` on the disc mesh of `level` with
 * the default coefficients. Fails with `GALBRUN_STATUS_SIZE_LIMIT` on large
 * problems.
 *
 * # Safety
 * `out` must be valid.
 */
enum GalbrunStatus galbrun_diagnostics(enum GalbrunMethod method,
                                       size_t level,
                                       size_t p,
                                       struct GalbrunDiagnostics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GALBRUN_H */
