#include "stylestruct/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stylestruct/error.hpp"

namespace stylestruct {

GradCheckResult grad_check(const std::function<Tensor<double>()>& loss,
                           std::vector<std::pair<std::string, Tensor<double>>> inputs, double step,
                           std::size_t max_coords, std::uint64_t seed) {
    if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");

    for (auto& [name, t] : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    loss().backward();

    GradCheckResult result;
    std::mt19937_64 rng(seed);
    for (auto& [name, t] : inputs) {
        const auto n = static_cast<std::size_t>(t.size());
        std::vector<std::size_t> coords(n);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (n > max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        const std::vector<double> analytic(t.grad().begin(), t.grad().end());
        auto values = t.values();
        for (std::size_t i : coords) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = loss().item();
            values[i] = saved - step;
            const double down = loss().item();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic.empty() ? 0.0 : analytic[i];
            const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
            ++result.coords_checked;
            if (err >= result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_input = name;
                result.worst_index = static_cast<Index>(i);
                result.analytic = a;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace stylestruct
