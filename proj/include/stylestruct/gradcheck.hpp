#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_input;
    Index worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t coords_checked = 0;
};

/// Compares reverse-mode gradients against central differences.
///
/// `loss` must rebuild the graph from the current values of `inputs` and
/// return a single-element tensor. Up to `max_coords` coordinates of each
/// input are sampled (all of them when the input is smaller). The error of a
/// coordinate is |analytic - numeric| / max(1, |analytic|).
GradCheckResult grad_check(const std::function<Tensor<double>()>& loss,
                           std::vector<std::pair<std::string, Tensor<double>>> inputs, double step,
                           std::size_t max_coords = 64, std::uint64_t seed = 0);

}  // namespace stylestruct
