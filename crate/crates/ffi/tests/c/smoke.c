#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "planeclust.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, pc_last_error_message());                  \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    PcDataset *data = NULL;
    CHECK(pc_dataset_generate("s1", "clean", 0, &data) == PC_STATUS_OK);
    size_t n = pc_dataset_len(data), dim = pc_dataset_dim(data);
    CHECK(n == 150 && dim == 2);

    PcParams params = pc_params_default(3);
    PcFitResult *fit = NULL;
    CHECK(pc_fit(data, PC_METHOD_RFLKPC, &params, &fit) == PC_STATUS_OK);
    CHECK(pc_fit_k(fit) == 3);

    int64_t *truth = malloc(n * sizeof *truth);
    size_t *labels = malloc(n * sizeof *labels);
    int64_t *pred = malloc(n * sizeof *pred);
    CHECK(pc_dataset_labels(data, truth, n) == PC_STATUS_OK);
    CHECK(pc_fit_labels(fit, labels, n - 1) == PC_STATUS_BUFFER_TOO_SMALL);
    CHECK(strlen(pc_last_error_message()) > 0);
    CHECK(pc_fit_labels(fit, labels, n) == PC_STATUS_OK);
    for (size_t i = 0; i < n; i++) pred[i] = (int64_t)labels[i];

    PcScores scores;
    CHECK(pc_scores(truth, pred, n, &scores) == PC_STATUS_OK);
    CHECK(scores.acc == 1.0);

    double normals[6];
    CHECK(pc_fit_normals(fit, normals, 6) == PC_STATUS_OK);
    for (int k = 0; k < 3; k++)
        CHECK(fabs(hypot(normals[2 * k], normals[2 * k + 1]) - 1.0) < 1e-9);

    params.alpha = 2.0;
    PcFitResult *bad = NULL;
    CHECK(pc_fit(data, PC_METHOD_RFLKPC, &params, &bad) == PC_STATUS_INVALID_INPUT);
    CHECK(bad == NULL);

    pc_fit_free(fit);
    pc_dataset_free(data);
    pc_dataset_free(NULL);
    free(truth);
    free(labels);
    free(pred);
    printf("ok %s\n", pc_version());
    return 0;
}
