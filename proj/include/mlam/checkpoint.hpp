#pragma once

#include <string>

#include "mlam/engine.hpp"

namespace mlam {

inline constexpr const char* kCheckpointVersion = "mlam-params-v1";

// Self-describing JSON container: version, hidden size, seed, and one named
// bundle of shaped flat f64 arrays per variable role. Round-trips bitwise.
void save_checkpoint(const std::string& path, const MetaNets& nets, int hidden_size,
                     uint64_t seed);

struct Checkpoint {
    MetaNets nets;
    int hidden_size = 0;
    uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace mlam
