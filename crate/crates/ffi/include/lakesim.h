#ifndef LAKESIM_H
#define LAKESIM_H

#include <stddef.h>
#include <stdint.h>

typedef enum LakesimStatus {
  LAKESIM_STATUS_OK = 0,
  LAKESIM_STATUS_NULL_ARGUMENT = 1,
  LAKESIM_STATUS_VALIDATION = 2,
  LAKESIM_STATUS_CONFIGURATION = 3,
  LAKESIM_STATUS_NUMERICAL = 4,
  LAKESIM_STATUS_IO = 5,
  LAKESIM_STATUS_LENGTH_MISMATCH = 6,
  LAKESIM_STATUS_PANIC = 7,
} LakesimStatus;

/**
 * Masked grid with its depth profile.
 */
typedef struct LakesimGrid LakesimGrid;

/**
 * Vorticity transport run with its recorded snapshots.
 */
typedef struct LakesimSimulation LakesimSimulation;

/**
 * Result of one elliptic solve.
 */
typedef struct LakesimSolution LakesimSolution;

/**
 * Transport settings. A non-positive `truncation` disables the monitor.
 */
typedef struct LakesimTransportParams {
  double cfl;
  double t_end;
  double viscosity;
  double output_every;
  double truncation;
} LakesimTransportParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length excluding the
 * terminator; pass `buf = NULL` to query it.
 *
 * # Safety
 * `buf` must be NULL or point to at least `cap` writable bytes.
 */
size_t lakesim_last_error(char *buf, size_t cap);

/**
 * Static NUL-terminated version string.
 */
const char *lakesim_version(void);

/**
 * Disk of radius `radius`, depth `b = phi^a`, spacing `h`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum LakesimStatus lakesim_grid_new_disk(double radius,
                                         double a,
                                         double h,
                                         struct LakesimGrid **out);

/**
 * Grid from the `[domain]` section of a TOML run configuration.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum LakesimStatus lakesim_grid_from_config(const char *config, struct LakesimGrid **out);

/**
 * # Safety
 * `grid` must come from a `lakesim_grid_*` constructor and not be used again.
 */
void lakesim_grid_free(struct LakesimGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LakesimStatus lakesim_grid_len(const struct LakesimGrid *grid, size_t *out);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LakesimStatus lakesim_grid_spacing(const struct LakesimGrid *grid, double *out);

/**
 * Cell centers as interleaved `x, y`; `len` is twice the cell count.
 *
 * # Safety
 * `xy` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_grid_centers(const struct LakesimGrid *grid, double *xy, size_t len);

/**
 * Depth `b` at the cell centers.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_grid_depth(const struct LakesimGrid *grid, double *out, size_t len);

/**
 * Solves `div((1/b) grad Psi) = rhs`, `Psi = 0` on the shore, to relative
 * residual `tol`.
 *
 * # Safety
 * `grid` must be live, `rhs` must hold `len` doubles, `out` must be writable.
 */
enum LakesimStatus lakesim_solve_elliptic(const struct LakesimGrid *grid,
                                          const double *rhs,
                                          size_t len,
                                          double tol,
                                          struct LakesimSolution **out);

/**
 * # Safety
 * `sol` must come from [`lakesim_solve_elliptic`] and not be used again.
 */
void lakesim_solution_free(struct LakesimSolution *sol);

/**
 * # Safety
 * `sol` must be live; `iterations` and `residual` writable.
 */
enum LakesimStatus lakesim_solution_stats(const struct LakesimSolution *sol,
                                          size_t *iterations,
                                          double *residual);

/**
 * Stream function at the cell centers.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_solution_psi(const struct LakesimSolution *sol, double *out, size_t len);

/**
 * Scaled potential `Psi / phi^(a+1)`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_solution_phi_scaled(const struct LakesimSolution *sol,
                                               double *out,
                                               size_t len);

/**
 * Velocity as interleaved `v1, v2`; `len` is twice the cell count.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_solution_velocity(const struct LakesimSolution *sol,
                                             double *out,
                                             size_t len);

/**
 * Defaults: `cfl = 0.5`, `t_end = 1`, inviscid, snapshots every `0.1`, no truncation.
 */
struct LakesimTransportParams lakesim_transport_params_default(void);

/**
 * Prepares a run from initial vorticity `omega0`.
 *
 * # Safety
 * `grid` and `params` must be valid, `omega0` must hold `len` doubles and
 * `out` must be writable.
 */
enum LakesimStatus lakesim_simulation_new(const struct LakesimGrid *grid,
                                          const double *omega0,
                                          size_t len,
                                          const struct LakesimTransportParams *params,
                                          struct LakesimSimulation **out);

/**
 * Advances to the end time. After a failure the snapshots recorded so far
 * stay readable.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum LakesimStatus lakesim_simulation_run(struct LakesimSimulation *sim);

/**
 * # Safety
 * `sim` must come from [`lakesim_simulation_new`] and not be used again.
 */
void lakesim_simulation_free(struct LakesimSimulation *sim);

/**
 * # Safety
 * `sim` must be live and `out` writable.
 */
enum LakesimStatus lakesim_simulation_snapshot_count(const struct LakesimSimulation *sim,
                                                     size_t *out);

/**
 * Time, `sum b^eps omega h^2` and `|sqrt(b) v|_2^2` of snapshot `index`.
 *
 * # Safety
 * `sim` must be live; the output pointers writable.
 */
enum LakesimStatus lakesim_simulation_snapshot_info(const struct LakesimSimulation *sim,
                                                    size_t index,
                                                    double *time,
                                                    double *mass,
                                                    double *energy);

/**
 * Vorticity of snapshot `index`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum LakesimStatus lakesim_simulation_omega(const struct LakesimSimulation *sim,
                                            size_t index,
                                            double *out,
                                            size_t len);

/**
 * Truncated fundamental solution `E^eps(x, y)` in the plane; points are
 * `(x_1, x_n)` with `x_n >= 0`.
 *
 * # Safety
 * `x` and `y` must each point to two doubles; `out` must be writable.
 */
enum LakesimStatus lakesim_kernel_e_eps(double a,
                                        double gamma,
                                        double eps,
                                        const double *x,
                                        const double *y,
                                        double *out);

/**
 * Approximate identity `G^eps(x, y)` in the plane.
 *
 * # Safety
 * `x` and `y` must each point to two doubles; `out` must be writable.
 */
enum LakesimStatus lakesim_kernel_g_eps(double a,
                                        double gamma,
                                        double eps,
                                        const double *x,
                                        const double *y,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAKESIM_H */
