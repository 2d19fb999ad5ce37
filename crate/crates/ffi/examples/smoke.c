#include <math.h>
#include <stdio.h>

#include "lissscan.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        LsStatus s_ = (call);                                                \
        if (s_ != LS_STATUS_OK) {                                            \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,          \
                    ls_last_error_message());                                \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    LsDesign *design = NULL;
    LsDesignInfo info;
    CHECK(ls_design_new(1.5, 7, LS_RULE_PROPOSED, &design));
    CHECK(ls_design_info(design, &info));

    LsScannerConfig config = {1.5, 1.0, 20.0, 20.0};
    LsPattern *pattern = NULL;
    double fill = 0.0;
    CHECK(ls_pattern_sample(design, &config, 0, 1000, &pattern));
    CHECK(ls_fill_factor(pattern, 128, &fill, NULL));
    printf("fx = %lld/%lld, fill = %.4f, samples = %zu\n", (long long)info.fx_num,
           (long long)info.fx_den, fill, ls_pattern_len(pattern));

    LsDesign *bad = NULL;
    LsStatus s = ls_design_new(9.0, 7, LS_RULE_PROPOSED, &bad);
    printf("r = 9: status %d (%s)\n", (int)s, ls_last_error_message());

    ls_pattern_free(pattern);
    ls_design_free(design);
    return (info.fx_num == 41 && info.fx_den == 28 && s == LS_STATUS_INVALID_ARGUMENT) ? 0 : 1;
}
