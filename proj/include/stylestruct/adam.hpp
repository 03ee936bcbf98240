#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylestruct/network.hpp"

namespace stylestruct {

struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::map<std::string, std::vector<float>> m;
    std::map<std::string, std::vector<float>> v;

    /// Clears moments and the step counter, keeping hyperparameters.
    void reset();
};

/// One bias-corrected Adam update of every trainable tensor in `params`.
/// Tensors with no accumulated gradient see a zero gradient. A non-finite
/// gradient anywhere aborts before any parameter changes; the error names
/// the tensor and its largest finite |grad|.
void adam_step(NetworkParams<float>& params, AdamState& state);

}  // namespace stylestruct
