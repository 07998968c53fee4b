#ifndef MIXED_DBC_H
#define MIXED_DBC_H

/* Generated by cbindgen from the mixed-dbc-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of global estimator aggregates.
#define MDBC_N_AGGREGATES 16

// Result of every fallible call.
typedef enum MdbcStatus {
  MDBC_STATUS_OK = 0,
  MDBC_STATUS_NULL_POINTER = 1,
  MDBC_STATUS_INVALID_ARGUMENT = 2,
  MDBC_STATUS_MESH_MISMATCH = 3,
  MDBC_STATUS_SINGULAR = 4,
  MDBC_STATUS_UNKNOWN_PROBLEM = 5,
  MDBC_STATUS_BUFFER_TOO_SMALL = 6,
  MDBC_STATUS_INTERNAL = 7,
  MDBC_STATUS_PANIC = 8,
} MdbcStatus;

// Discrete field selector for [`mdbc_solution_field`].
typedef enum MdbcField {
  // State flux, one value per edge.
  MDBC_FIELD_P = 0,
  // State, one value per triangle.
  MDBC_FIELD_Y = 1,
  // Adjoint flux, one value per edge.
  MDBC_FIELD_R = 2,
  // Adjoint state, one value per triangle.
  MDBC_FIELD_Z = 3,
  // Control, one value per vertex.
  MDBC_FIELD_U = 4,
} MdbcField;

// Error indicator handle.
typedef struct MdbcIndicators MdbcIndicators;

// Triangulation handle.
typedef struct MdbcMesh MdbcMesh;

// Control problem handle.
typedef struct MdbcProblem MdbcProblem;

// Discrete solution handle.
typedef struct MdbcSolution MdbcSolution;

// Errors against the exact solution of a manufactured problem.
typedef struct MdbcErrorNorms {
  double y_l2;
  double z_l2;
  double u_l2;
  double p_hdiv;
  double r_hdiv;
  double u_h1;
  // Sum of the control seminorm and the four state/adjoint errors.
  double total;
} MdbcErrorNorms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failed call on this thread, or an empty
// string. Valid until the next call into the library on the same thread.
const char *mdbc_last_error(void);

// Library version as a NUL-terminated string with static lifetime.
const char *mdbc_version(void);

// Unit square split into `n x n` cells of two triangles each.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum MdbcStatus mdbc_mesh_unit_square(size_t n, struct MdbcMesh **out);

// Coarse L-shaped mesh of six triangles with the reentrant corner at the
// origin.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum MdbcStatus mdbc_mesh_lshape(struct MdbcMesh **out);

// Mesh from interleaved coordinates `xy` (`2 * n_vertices` values) and
// counter-clockwise cells (`3 * n_triangles` vertex indices).
//
// # Safety
// `xy` and `cells` must point to arrays of the stated lengths; `out` must be
// writable.
enum MdbcStatus mdbc_mesh_from_arrays(const double *xy,
                                      size_t n_vertices,
                                      const size_t *cells,
                                      size_t n_triangles,
                                      struct MdbcMesh **out);

// Releases a mesh. Null is ignored.
//
// # Safety
// `mesh` must come from this library and not be used afterwards.
void mdbc_mesh_free(struct MdbcMesh *mesh);

// Vertex, edge and triangle counts. Any output pointer may be null.
//
// # Safety
// `mesh` must be a live handle.
enum MdbcStatus mdbc_mesh_counts(const struct MdbcMesh *mesh,
                                 size_t *n_vertices,
                                 size_t *n_edges,
                                 size_t *n_triangles);

// Interleaved vertex coordinates, `2 * n_vertices` values.
//
// # Safety
// `buf` must hold `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_mesh_coordinates(const struct MdbcMesh *mesh,
                                      double *buf,
                                      size_t cap,
                                      size_t *len_out);

// Triangle vertex indices, `3 * n_triangles` values.
//
// # Safety
// `buf` must hold `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_mesh_cells(const struct MdbcMesh *mesh,
                                size_t *buf,
                                size_t cap,
                                size_t *len_out);

// Red refinement: every triangle split into four.
//
// # Safety
// `mesh` must be a live handle; `out` must be writable.
enum MdbcStatus mdbc_mesh_refine_uniform(const struct MdbcMesh *mesh, struct MdbcMesh **out);

// Newest-vertex bisection of the marked triangles plus conforming closure.
//
// # Safety
// `marked` must hold `n_marked` indices; `out` must be writable.
enum MdbcStatus mdbc_mesh_refine_nvb(const struct MdbcMesh *mesh,
                                     const size_t *marked,
                                     size_t n_marked,
                                     struct MdbcMesh **out);

// Built-in problem by name (`example1`, `example2`, `zero`). Pass NaN as
// `alpha` to keep the problem's own regularization parameter.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum MdbcStatus mdbc_problem_by_name(const char *name, double alpha, struct MdbcProblem **out);

// Releases a problem. Null is ignored.
//
// # Safety
// `problem` must come from this library and not be used afterwards.
void mdbc_problem_free(struct MdbcProblem *problem);

// Coarse mesh of the problem's domain.
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum MdbcStatus mdbc_problem_initial_mesh(const struct MdbcProblem *problem, struct MdbcMesh **out);

// Solves the discrete optimality system of `problem` on `mesh`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MdbcStatus mdbc_solve(const struct MdbcProblem *problem,
                           const struct MdbcMesh *mesh,
                           struct MdbcSolution **out);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must come from this library and not be used afterwards.
void mdbc_solution_free(struct MdbcSolution *solution);

// Coefficients of one discrete field.
//
// # Safety
// `buf` must hold `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_solution_field(const struct MdbcSolution *solution,
                                    enum MdbcField field,
                                    double *buf,
                                    size_t cap,
                                    size_t *len_out);

// Errors against the exact solution; fails for problems without one.
//
// # Safety
// Handles must be live and `out` writable.
enum MdbcStatus mdbc_solution_errors(const struct MdbcSolution *solution,
                                     const struct MdbcProblem *problem,
                                     const struct MdbcMesh *mesh,
                                     struct MdbcErrorNorms *out);

// Computes all estimator contributions for `solution`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MdbcStatus mdbc_estimate(const struct MdbcSolution *solution,
                              const struct MdbcProblem *problem,
                              const struct MdbcMesh *mesh,
                              struct MdbcIndicators **out);

// Releases an indicator field. Null is ignored.
//
// # Safety
// `indicators` must come from this library and not be used afterwards.
void mdbc_indicators_free(struct MdbcIndicators *indicators);

// Total estimator value.
//
// # Safety
// `indicators` must be live and `out` writable.
enum MdbcStatus mdbc_indicators_total(const struct MdbcIndicators *indicators, double *out);

// The `MDBC_N_AGGREGATES` global contributions, first six per element,
// then five over interior edges, then five over boundary edges.
//
// # Safety
// `buf` must hold `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_indicators_aggregates(const struct MdbcIndicators *indicators,
                                           double *buf,
                                           size_t cap,
                                           size_t *len_out);

// Per-triangle marking indicator, one value per triangle.
//
// # Safety
// `buf` must hold `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_indicators_element(const struct MdbcIndicators *indicators,
                                        double *buf,
                                        size_t cap,
                                        size_t *len_out);

// Dörfler marking: the smallest set of triangles whose squared indicators
// reach `theta` times the total, sorted ascending.
//
// # Safety
// `mu` must hold `n` values, `buf` `cap` values; `len_out` must be writable.
enum MdbcStatus mdbc_dorfler_mark(const double *mu,
                                  size_t n,
                                  double theta,
                                  size_t *buf,
                                  size_t cap,
                                  size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXED_DBC_H */
