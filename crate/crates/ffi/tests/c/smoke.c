#include <math.h>
#include <stdio.h>
#include <string.h>

#include "antlgp.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        AntlgpStatus s_ = (call);                                        \
        if (s_ != ANTLGP_STATUS_OK) {                                    \
            char msg_[256];                                              \
            antlgp_last_error(msg_, sizeof msg_);                        \
            fprintf(stderr, "%s failed (%d): %s\n", #call, s_, msg_);   \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    enum { N = 40 };
    double features[N * 2];
    int32_t labels[N];
    for (int i = 0; i < N; i++) {
        labels[i] = i % 2;
        features[2 * i] = labels[i] ? 0.9 : 0.1;
        features[2 * i + 1] = labels[i] ? 0.8 : 0.2;
    }

    AntlgpColonyOptions opts = antlgp_colony_options_default();
    opts.seed = 3;
    AntlgpColony *colony = NULL;
    CHECK(antlgp_colony_new(features, N, 2, labels, &opts, &colony));
    double h0 = 0.0, h1 = 0.0;
    CHECK(antlgp_colony_entropy(colony, 3, &h0));
    CHECK(antlgp_colony_step(colony, 2000));
    CHECK(antlgp_colony_finish(colony));
    CHECK(antlgp_colony_entropy(colony, 3, &h1));
    uint32_t clusters[N];
    size_t n_clusters = 0;
    CHECK(antlgp_colony_clusters(colony, 1, clusters, N, &n_clusters));
    printf("steps=%llu h0=%.4f h1=%.4f clusters=%zu\n",
           (unsigned long long)antlgp_colony_step_count(colony), h0, h1, n_clusters);
    antlgp_colony_free(colony);

    const char *text = "inputs 2\nregisters 2\nconstants 0\nr0 = mul i0 i1\nr0 = add r0 i0\n";
    AntlgpProgram *program = NULL;
    CHECK(antlgp_program_parse(text, &program));
    double in[2] = {0.5, -0.25}, out = 0.0;
    CHECK(antlgp_program_execute(program, in, 2, &out));
    antlgp_program_free(program);
    printf("program=%.6f\n", out);
    if (fabs(out - 0.375) > 1e-12) {
        return 2;
    }

    if (antlgp_colony_new(NULL, 1, 1, NULL, NULL, &colony) != ANTLGP_STATUS_NULL_POINTER) {
        return 3;
    }
    printf("version=%s\n", antlgp_version());
    return 0;
}
