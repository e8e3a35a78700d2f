#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "pleader.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    PldWavelet *w = NULL;
    CHECK(pld_wavelet_build(2, 3, &w) == PLD_STATUS_OK);
    double m0 = 1.0, m1 = 1.0;
    CHECK(pld_wavelet_moment(w, 0, &m0) == PLD_STATUS_OK && fabs(m0) < 1e-12);
    CHECK(pld_wavelet_moment(w, 1, &m1) == PLD_STATUS_OK && fabs(m1) < 1e-12);

    size_t n = 1025;
    double *samples = malloc(n * sizeof(double));
    for (size_t i = 0; i < n; i++) samples[i] = sin(6.0 * (double)i / (double)(n - 1));
    PldPlane *plane = NULL;
    CHECK(pld_cwt(w, samples, n, 0.0, 1.0 / 1024.0, 0.125, 1.0 / 32.0, 4, 0.25, 1.0 / 128.0, 65, &plane) == PLD_STATUS_OK);
    size_t rows = 0, cols = 0;
    CHECK(pld_plane_shape(plane, &rows, &cols) == PLD_STATUS_OK);
    CHECK(rows == 9 && cols == 65);
    double *values = malloc(rows * cols * sizeof(double));
    CHECK(pld_plane_values(plane, values, rows * cols) == PLD_STATUS_OK);
    for (size_t i = 0; i < rows * cols; i++) CHECK(isfinite(values[i]));

    PldPlane *none = NULL;
    CHECK(pld_cwt(w, samples, 0, 0.0, 1.0, 0.125, 1.0 / 32.0, 4, 0.25, 1.0 / 128.0, 65, &none) == PLD_STATUS_INVALID_ARGUMENT);
    CHECK(none == NULL);
    char msg[256];
    CHECK(pld_last_error_message(msg, sizeof msg) > 0);

    PldPulses *pulses = NULL;
    CHECK(pld_pulses_simulate(-0.7, 0.5, 8, 3, &pulses) == PLD_STATUS_OK);
    size_t count = 0;
    CHECK(pld_pulses_count(pulses, &count) == PLD_STATUS_OK && count > 0);

    double lo = 0.0, hi = 0.0;
    CHECK(pld_admissible_p_range(-0.7, 0.5, &lo, &hi) == PLD_STATUS_OK);
    CHECK(lo == 1.0 && fabs(hi - 10.0 / 7.0) < 1e-12);

    printf("pleader %s ok\n", pld_version());
    pld_pulses_free(pulses);
    pld_plane_free(plane);
    pld_wavelet_free(w);
    free(values);
    free(samples);
    return 0;
}
