#include "stylestruct/adam.hpp"

#include <cmath>
#include <sstream>

#include "stylestruct/error.hpp"

namespace stylestruct {

void AdamState::reset() {
    step = 0;
    m.clear();
    v.clear();
}

void adam_step(NetworkParams<float>& params, AdamState& s) {
    for (const auto& [name, t] : params.tensors) {
        if (!t.requires_grad()) continue;
        const auto g = t.grad();
        bool finite = true;
        double max_abs = 0;
        for (float x : g) {
            if (!std::isfinite(x)) {
                finite = false;
                continue;
            }
            max_abs = std::max(max_abs, static_cast<double>(std::abs(x)));
        }
        if (!finite) {
            std::ostringstream os;
            os << "non-finite gradient in '" << name << "' (max finite |grad| " << max_abs << ")";
            throw DivergenceError(os.str());
        }
    }
    ++s.step;
    const double t = static_cast<double>(s.step);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    for (auto& [name, p] : params.tensors) {
        if (!p.requires_grad()) continue;
        const std::size_t n = static_cast<std::size_t>(p.size());
        auto& m = s.m[name];
        auto& v = s.v[name];
        if (m.size() != n) m.assign(n, 0.f);
        if (v.size() != n) v.assign(n, 0.f);
        const auto g = p.grad();
        auto w = p.values();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g.empty() ? 0.0 : static_cast<double>(g[i]);
            const double mi = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
            const double vi = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double update = s.lr * (mi / c1) / (std::sqrt(vi / c2) + s.eps);
            w[i] = static_cast<float>(static_cast<double>(w[i]) - update);
        }
    }
}

}  // namespace stylestruct
