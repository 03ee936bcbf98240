#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "stylestruct/app.hpp"
#include "stylestruct/error.hpp"
#include "stylestruct/gradcheck.hpp"
#include "stylestruct/losses.hpp"
#include "stylestruct/network.hpp"

namespace stylestruct {
namespace {

using Probes = std::vector<std::pair<std::string, Tensor<double>>>;

constexpr int kOpPoints = 10;
constexpr double kOpStep = 1e-3;
constexpr double kNetworkStep = 1e-6;
constexpr std::size_t kNetworkCoords = 2;

Tensor<double> rand_t(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0, double min_abs = 0.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (auto& x : v) {
        double d;
        do d = u(rng);
        while (std::abs(d) < min_abs);
        x = d;
    }
    return Tensor<double>(std::move(shape), std::move(v));
}

Tensor<double> readout(const Tensor<double>& y, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x7265616475ULL);
    return sum(mul(y, rand_t(y.shape(), rng)));
}

// One point of an op check: builds inputs from `rng`, returns the result.
using PointFn = std::function<GradCheckResult(std::mt19937_64&, std::uint64_t)>;

struct Registered {
    std::string name;
    std::string scope;
    std::function<GradCheckResult()> run;
};

GradCheckResult worst_of(const GradCheckResult& a, const GradCheckResult& b) {
    GradCheckResult r = a.max_rel_error >= b.max_rel_error ? a : b;
    r.coords_checked = a.coords_checked + b.coords_checked;
    return r;
}

Registered op_case(std::string name, std::uint64_t id, PointFn fn) {
    return {name, "ops", [id, fn] {
                GradCheckResult total;
                for (std::uint64_t p = 0; p < kOpPoints; ++p) {
                    std::mt19937_64 rng(1000 * id + p);
                    total = worst_of(total, fn(rng, p));
                }
                return total;
            }};
}

GradCheckResult check(const std::function<Tensor<double>()>& f, Probes probes) {
    return grad_check(f, std::move(probes), kOpStep);
}

std::vector<Registered> op_cases() {
    std::vector<Registered> c;
    std::uint64_t id = 0;
    c.push_back(op_case("conv2d", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({2, 3, 6, 5}, rng), k = rand_t({4, 3, 3, 3}, rng), b = rand_t({4}, rng);
        return check([=] { return readout(conv2d(x, k, b, 2, 1), p); }, {{"x", x}, {"kernel", k}, {"bias", b}});
    }));
    c.push_back(op_case("conv_transpose2d", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({2, 3, 3, 4}, rng), k = rand_t({3, 2, 4, 4}, rng), b = rand_t({2}, rng);
        return check([=] { return readout(conv_transpose2d(x, k, b, 2, 1), p); },
                     {{"x", x}, {"kernel", k}, {"bias", b}});
    }));
    c.push_back(op_case("linear", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({3, 5}, rng), w = rand_t({5, 2}, rng), b = rand_t({2}, rng);
        return check([=] { return readout(linear(x, w, b), p); }, {{"x", x}, {"weight", w}, {"bias", b}});
    }));
    for (Activation a : {Activation::None, Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid})
        c.push_back(op_case(activation_name(a), ++id, [a](std::mt19937_64& rng, std::uint64_t p) {
            // Values kept clear of the kink at 0.
            auto x = rand_t({24}, rng, -2.0, 2.0, 0.01);
            return check([=] { return readout(activate(x, a), p); }, {{"x", x}});
        }));
    c.push_back(op_case("batch_norm", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({3, 2, 3, 3}, rng), g = rand_t({2}, rng), b = rand_t({2}, rng);
        auto f = rand_t({4, 3}, rng), fg = rand_t({3}, rng), fb = rand_t({3}, rng);
        BatchNormStats<double> st(2), fst(3);
        auto train = check(
            [=]() mutable { return add(readout(batch_norm(x, g, b, st, true), p), readout(batch_norm(f, fg, fb, fst, true), p + 1)); },
            {{"x", x}, {"gamma", g}, {"beta", b}, {"x2d", f}, {"gamma2d", fg}, {"beta2d", fb}});
        BatchNormStats<double> ev(2);
        ev.mean = {0.3, -0.1};
        ev.var = {0.5, 2.0};
        auto eval = check([=]() mutable { return readout(batch_norm(x, g, b, ev, false), p); },
                          {{"x", x}, {"gamma", g}, {"beta", b}});
        return worst_of(train, eval);
    }));
    c.push_back(op_case("softmax_channels", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto z = rand_t({2, 5, 2, 3}, rng, -3.0, 3.0);
        return check([=] { return readout(softmax_channels(z), p); }, {{"logits", z}});
    }));
    c.push_back(op_case("softmax_xent", ++id, [](std::mt19937_64& rng, std::uint64_t) {
        auto z = rand_t({2, 5, 2, 3}, rng, -3.0, 3.0);
        std::vector<std::int32_t> lbl(12);
        for (auto& l : lbl) l = static_cast<std::int32_t>(1 + rng() % 5);
        return check([=] { return softmax_cross_entropy_pixels(z, lbl); }, {{"logits", z}});
    }));
    c.push_back(op_case("resize_bilinear", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({1, 2, 3, 4}, rng);
        return check([=] { return readout(resize_bilinear(x, 7, 9), p); }, {{"x", x}});
    }));
    c.push_back(op_case("concat_channels", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto a = rand_t({2, 2, 3, 3}, rng), b = rand_t({2, 1, 3, 3}, rng);
        return check([=] { return readout(concat_channels(a, b), p); }, {{"a", a}, {"b", b}});
    }));
    c.push_back(op_case("max_pool2d", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        // Distinct values spaced wider than the probe keep every argmax fixed.
        std::vector<double> v(2 * 2 * 5 * 5);
        std::iota(v.begin(), v.end(), 0.0);
        std::shuffle(v.begin(), v.end(), rng);
        for (auto& e : v) e *= 0.01;
        Tensor<double> x({2, 2, 5, 5}, v);
        return check([=] { return readout(max_pool2d(x, 3, 2, 1), p); }, {{"x", x}});
    }));
    c.push_back(op_case("reshape", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({2, 6}, rng);
        return check([=] { return readout(reshape(x, {3, 2, 2}), p); }, {{"x", x}});
    }));
    c.push_back(op_case("batch_slice", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto x = rand_t({4, 3}, rng);
        return check([=] { return readout(batch_slice(x, 1, 3), p); }, {{"x", x}});
    }));
    c.push_back(op_case("add", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto a = rand_t({3, 4}, rng), b = rand_t({3, 4}, rng);
        return check([=] { return readout(add(a, b), p); }, {{"a", a}, {"b", b}});
    }));
    c.push_back(op_case("mul", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto a = rand_t({3, 4}, rng), b = rand_t({3, 4}, rng);
        return check([=] { return readout(mul(a, b), p); }, {{"a", a}, {"b", b}});
    }));
    c.push_back(op_case("scale", ++id, [](std::mt19937_64& rng, std::uint64_t p) {
        auto a = rand_t({3, 4}, rng);
        const double f = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
        return check([=] { return readout(scale(a, f), p); }, {{"a", a}});
    }));
    c.push_back(op_case("sum", ++id, [](std::mt19937_64& rng, std::uint64_t) {
        auto a = rand_t({3, 4}, rng);
        return check([=] { return sum(a); }, {{"a", a}});
    }));
    c.push_back(op_case("bce_sum", ++id, [](std::mt19937_64& rng, std::uint64_t) {
        // Scores stay inside the clamp band where the loss is smooth.
        auto s = rand_t({6, 1}, rng, 0.05, 0.95);
        auto t = rand_t({6, 1}, rng, 0.05, 0.95);
        return check([=] { return add(bce_sum(s, 1), bce_sum(t, 0)); }, {{"real", s}, {"fake", t}});
    }));
    return c;
}

GradCheckResult network_check(NetworkKind kind) {
    auto spec = build_network(kind, Scale{4});
    auto params = init_params<double>(spec, 11);
    std::mt19937_64 rng(12 + static_cast<std::uint64_t>(kind));
    std::map<std::string, Tensor<double>> in;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::Input)
            in.emplace(l.name, rand_t(l.height > 0 ? Shape{2, l.channels, l.height, l.width} : Shape{2, l.channels}, rng));
    Probes probes;
    for (const auto& [n, t] : params.tensors) probes.emplace_back(n, t);
    for (auto& [n, t] : in) probes.emplace_back("input:" + n, t);
    return grad_check([&] { return readout(forward(spec, params, in, Mode::Train), 5); }, probes, kNetworkStep,
                      kNetworkCoords);
}

std::vector<Registered> network_cases() {
    std::vector<Registered> c;
    for (NetworkKind k : {NetworkKind::StructureGenerator, NetworkKind::StructureDiscriminator, NetworkKind::StyleGenerator,
                          NetworkKind::StyleDiscriminator, NetworkKind::Fcn})
        c.push_back({network_kind_name(k), "networks", [k] { return network_check(k); }});
    return c;
}

// x^2 with the factor 2 missing from its backward.
Registered corrupt_case() {
    return {"square_wrong", "ops", [] {
                Tensor<double> x({3}, {0.3, -0.2, 0.5});
                auto f = [&] {
                    std::vector<double> v(x.values().begin(), x.values().end());
                    for (auto& e : v) e = e * e;
                    auto* xn = x.node();
                    return sum(Tensor<double>::make_result(x.shape(), v, {x}, "square_wrong", [xn](detail::Node<double>& o) {
                        xn->ensure_grad();
                        for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i] * xn->value[i];
                    }));
                };
                return grad_check(f, {{"x", x}}, kOpStep);
            }};
}

std::vector<Registered> select(const std::string& scope) {
    if (scope != "ops" && scope != "networks" && scope != "all")
        throw ConfigError("unknown gradcheck scope '" + scope + "' (expected ops, networks or all)");
    std::vector<Registered> out;
    if (scope != "networks")
        for (auto& c : op_cases()) out.push_back(std::move(c));
    if (scope != "ops")
        for (auto& c : network_cases()) out.push_back(std::move(c));
    return out;
}

}  // namespace

std::vector<std::string> gradcheck_case_names(const std::string& scope) {
    std::vector<std::string> names;
    for (const auto& c : select(scope)) names.push_back(c.name);
    return names;
}

GradCheckReport run_gradcheck(const std::string& scope, bool corrupt_fixture) {
    auto cases = select(scope);
    if (corrupt_fixture) cases.push_back(corrupt_case());
    GradCheckReport rep;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& c : cases) {
        const GradCheckResult r = c.run();
        GradCheckCase out;
        out.name = c.name;
        out.scope = c.scope;
        out.max_rel_error = r.max_rel_error;
        out.coords = r.coords_checked;
        out.worst = r.worst_input + "[" + std::to_string(r.worst_index) + "]";
        out.pass = r.max_rel_error <= kGradCheckTolerance && r.coords_checked > 0;
        rep.pass = rep.pass && out.pass;
        if (rep.worst_case.empty() || out.max_rel_error > rep.worst_error) {
            rep.worst_case = out.name + " " + out.worst;
            rep.worst_error = out.max_rel_error;
        }
        rep.cases.push_back(std::move(out));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::string format_gradcheck_report(const GradCheckReport& r) {
    std::ostringstream os;
    char buf[256];
    for (const auto& c : r.cases) {
        std::snprintf(buf, sizeof buf, "%-4s %-9s %-24s max_rel_err %.3e  coords %zu  worst %s\n", c.pass ? "ok" : "FAIL",
                      c.scope.c_str(), c.name.c_str(), c.max_rel_error, c.coords, c.worst.c_str());
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "worst offender: %s (%.3e, tolerance %.0e)\n", r.worst_case.c_str(), r.worst_error,
                  kGradCheckTolerance);
    os << buf;
    std::snprintf(buf, sizeof buf, "%s: %zu cases in %.1f s\n", r.pass ? "PASS" : "FAIL", r.cases.size(), r.seconds);
    os << buf;
    return os.str();
}

}  // namespace stylestruct
