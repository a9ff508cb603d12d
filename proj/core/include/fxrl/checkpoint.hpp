#pragma once

#include <stdexcept>
#include <string>

#include "fxrl/network.hpp"

namespace fxrl::nn {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    NetworkConfig config;
    TensorMap params;
};

// Versioned little-endian binary: magic, format version, the network
// dimensions, then each tensor as (name, shape, raw doubles). Values
// round-trip bit for bit.
void save_checkpoint(const std::string& path, const TensorMap& params,
                     const NetworkConfig& cfg);

// Throws CheckpointError on bad magic, unknown version, truncation, or
// shapes that disagree with the embedded dimensions.
Checkpoint load_checkpoint(const std::string& path);

}
