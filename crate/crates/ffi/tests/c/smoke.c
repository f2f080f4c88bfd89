#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "lakesim.h"

#define CHECK(call)                                                   \
    do {                                                              \
        LakesimStatus s_ = (call);                                    \
        if (s_ != LAKESIM_STATUS_OK) {                                \
            char msg_[256];                                           \
            lakesim_last_error(msg_, sizeof msg_);                    \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, msg_);  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    LakesimGrid *grid = NULL;
    CHECK(lakesim_grid_new_disk(1.0, 1.0, 1.0 / 32.0, &grid));
    size_t n = 0;
    CHECK(lakesim_grid_len(grid, &n));
    double *xy = malloc(2 * n * sizeof(double));
    double *rhs = malloc(n * sizeof(double));
    double *psi = malloc(n * sizeof(double));
    CHECK(lakesim_grid_centers(grid, xy, 2 * n));
    for (size_t k = 0; k < n; k++) rhs[k] = -8.0;

    LakesimSolution *sol = NULL;
    CHECK(lakesim_solve_elliptic(grid, rhs, n, 1e-10, &sol));
    CHECK(lakesim_solution_psi(sol, psi, n));
    double err = 0.0, norm = 0.0;
    for (size_t k = 0; k < n; k++) {
        double r2 = xy[2 * k] * xy[2 * k] + xy[2 * k + 1] * xy[2 * k + 1];
        double e = (1.0 - r2) * (1.0 - r2);
        err += (psi[k] - e) * (psi[k] - e);
        norm += e * e;
    }
    if (sqrt(err / norm) > 0.02) {
        fprintf(stderr, "relative error %g\n", sqrt(err / norm));
        return 2;
    }

    if (lakesim_solve_elliptic(grid, rhs, n - 1, 1e-10, &sol) != LAKESIM_STATUS_LENGTH_MISMATCH) return 3;
    if (lakesim_last_error(NULL, 0) == 0) return 4;

    lakesim_solution_free(sol);
    lakesim_grid_free(grid);
    free(xy);
    free(rhs);
    free(psi);
    printf("ok %s\n", lakesim_version());
    return 0;
}
