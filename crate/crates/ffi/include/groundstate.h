#ifndef GROUNDSTATE_H
#define GROUNDSTATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_DOMAIN = 2,
  GS_STATUS_EMPTY_ADMISSIBLE_SET = 3,
  GS_STATUS_LINE_SEARCH_FAILURE = 4,
  GS_STATUS_NO_GROUND_STATE = 5,
  GS_STATUS_NUMERICAL = 6,
  GS_STATUS_PANIC = 7,
} GsStatus;

typedef enum GsGrading {
  GS_GRADING_UNIFORM = 0,
  GS_GRADING_GEOMETRIC = 1,
} GsGrading;

typedef struct GsField GsField;

typedef struct GsGrid GsGrid;

typedef struct GsNonlinearity GsNonlinearity;

typedef struct GsSolution GsSolution;

typedef struct GsSolveOptions {
  double tol;
  size_t max_iter;
  size_t rounds;
} GsSolveOptions;

// Integrals of one field, mirroring the library's energy report.
typedef struct GsEnergyReport {
  double dirichlet;
  double int_g_plus;
  double int_g_minus_eps;
  double j_eps;
  double pohozaev_residual;
  double eps;
} GsEnergyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length in bytes.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t gs_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *gs_version(void);

struct GsSolveOptions gs_solve_options_default(void);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_nonlinearity_logarithmic(struct GsNonlinearity **out);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_nonlinearity_cubic_quintic(uint32_t dim,
                                            double p,
                                            double m,
                                            struct GsNonlinearity **out);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_nonlinearity_zero_mass(uint32_t dim, struct GsNonlinearity **out);

// # Safety
// `nl` must be null or a handle from this library not yet freed.
void gs_nonlinearity_free(struct GsNonlinearity *nl);

// Writes `g(s)` and `G(s)`.
//
// # Safety
// Pointers must be valid.
enum GsStatus gs_nonlinearity_eval(const struct GsNonlinearity *nl,
                                   double s,
                                   double *g,
                                   double *primitive);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_m0_threshold(uint32_t dim, double p, double *out);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_sharp_constant(uint32_t dim, double level, double *out);

// # Safety
// `out` must be valid for writes.
enum GsStatus gs_grid_radial(uint32_t dim,
                             double r_max,
                             size_t points,
                             enum GsGrading grading,
                             struct GsGrid **out);

// Antisymmetric biradial grid in dimension 4 with `points` nodes per polar axis.
//
// # Safety
// `out` must be valid for writes.
enum GsStatus gs_grid_biradial(double r_max, size_t points, struct GsGrid **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `grid` must be null or a live handle.
size_t gs_grid_len(const struct GsGrid *grid);

// # Safety
// `grid` must be null or a live handle.
void gs_grid_free(struct GsGrid *grid);

// Builds a field from `len` node values, which must match the grid size.
//
// # Safety
// `values` must be valid for `len` reads.
enum GsStatus gs_field_from_values(const struct GsGrid *grid,
                                   const double *values,
                                   size_t len,
                                   struct GsField **out);

// # Safety
// `field` must be null or a live handle.
size_t gs_field_len(const struct GsField *field);

// Copies up to `len` node values into `buf`.
//
// # Safety
// `buf` must be valid for `len` writes.
enum GsStatus gs_field_values(const struct GsField *field, double *buf, size_t len);

// # Safety
// `field` must be null or a live handle.
void gs_field_free(struct GsField *field);

// # Safety
// Pointers must be valid.
enum GsStatus gs_energy(const struct GsField *field,
                        const struct GsNonlinearity *nl,
                        double eps,
                        struct GsEnergyReport *out);

// # Safety
// Pointers must be valid.
enum GsStatus gs_reduced_level(const struct GsField *field,
                               const struct GsNonlinearity *nl,
                               double eps,
                               double *out);

// # Safety
// Pointers must be valid.
enum GsStatus gs_pde_residual(const struct GsField *field,
                              const struct GsNonlinearity *nl,
                              double *out);

// Minimizes at a single `eps`; `opts` may be null for defaults.
//
// # Safety
// Pointers must be valid; `opts` may be null.
enum GsStatus gs_minimize(const struct GsGrid *grid,
                          const struct GsNonlinearity *nl,
                          double eps,
                          const struct GsSolveOptions *opts,
                          struct GsSolution **out);

// Runs the eps schedule `eps[0..len]`, which must decrease to 0.
//
// # Safety
// `eps` must be valid for `len` reads; `opts` may be null.
enum GsStatus gs_continuation(const struct GsGrid *grid,
                              const struct GsNonlinearity *nl,
                              const double *eps,
                              size_t len,
                              const struct GsSolveOptions *opts,
                              struct GsSolution **out);

// # Safety
// Pointers must be valid.
enum GsStatus gs_solution_level(const struct GsSolution *sol, double *out);

// # Safety
// Pointers must be valid.
enum GsStatus gs_solution_report(const struct GsSolution *sol, struct GsEnergyReport *out);

// Writes 1 if the solve converged, else 0.
//
// # Safety
// Pointers must be valid.
enum GsStatus gs_solution_converged(const struct GsSolution *sol, int32_t *out);

// # Safety
// Pointers must be valid.
enum GsStatus gs_solution_iterations(const struct GsSolution *sol, size_t *out);

// Returns a new handle owning a copy of the minimizer.
//
// # Safety
// Pointers must be valid.
enum GsStatus gs_solution_field(const struct GsSolution *sol, struct GsField **out);

// # Safety
// `sol` must be null or a live handle.
void gs_solution_free(struct GsSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROUNDSTATE_H */
