#pragma once

#include "mlam/metanet.hpp"

namespace mlam {

// Adam moments mirroring the MetaNetParams tensor bundle, zero-initialized.
struct AdamState {
    MetaNetParams m, v;
    int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(const MetaNetParams& like, double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8);

// One bias-corrected Adam step in place. Returns false (and leaves params,
// moments and the step counter untouched) when any gradient entry is
// non-finite; meta-training carries on past such windows.
bool adam_update(MetaNetParams& params, const MetaNetParams& grads, AdamState& state, double lr);

}  // namespace mlam
