/* Fit a small simulated regression through the C interface.
 *
 *   cargo build --release -p dss-ffi
 *   cc examples/fit.c -Iinclude -L../../target/release -ldss_ffi -lm -o fit
 */
#include <stdio.h>
#include <stdlib.h>

#include "dss.h"

static int check(DssStatus s) {
    if (s != DssStatus_Ok) {
        fprintf(stderr, "error %d: %s\n", (int)s, dss_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    enum { N = 60, Q = 2 };
    double y[N], x[N * Q];
    unsigned state = 7;
    for (int t = 0; t < N; t++) {
        for (int j = 0; j < Q; j++) {
            state = state * 1103515245u + 12345u;
            x[t * Q + j] = ((double)(state >> 8) / (1 << 24)) - 0.5;
        }
        y[t] = (t < N / 2 ? 1.5 : 0.0) * x[t * Q];
    }

    DssDataset *data = NULL;
    DssConfig *cfg = NULL;
    DssFit *fit = NULL;
    if (check(dss_dataset_new(y, x, N, Q, &data))) return 1;
    if (check(dss_config_new(DssPrior_Nmig, "example1", 2000, 1000, 42, &cfg))) return 1;
    if (check(dss_config_set(cfg, "a_sigma", "2"))) return 1;
    if (check(dss_fit(data, cfg, &fit))) return 1;

    double *incl = malloc(sizeof(double) * N * Q);
    if (check(dss_fit_coefficients(fit, DssStatistic_Inclusion, incl, N * Q))) return 1;
    printf("dss %s\n", dss_version());
    printf("slab probability of x1 at t=1: %.3f, at t=%d: %.3f\n", incl[0], N, incl[(N - 1) * Q]);

    free(incl);
    dss_fit_free(fit);
    dss_config_free(cfg);
    dss_dataset_free(data);
    return 0;
}
