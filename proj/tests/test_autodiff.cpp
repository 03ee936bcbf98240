#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "stylestruct/error.hpp"
#include "stylestruct/gradcheck.hpp"
#include "stylestruct/ops.hpp"
#include "test_util.hpp"

using namespace stylestruct;
using stylestruct::testing::random_tensor;
using stylestruct::testing::readout;

namespace {

Tensor<double> ones(Shape s, bool rg = false) {
    return Tensor<double>(s, std::vector<double>(static_cast<std::size_t>(numel(s)), 1.0), rg);
}

// Direct sum over window positions; independent of the im2col path.
std::vector<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& k, const Tensor<double>& b,
                                int stride, int pad) {
    const Index N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const Index K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    const Index Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(N * K * Ho * Wo));
    for (Index n = 0; n < N; ++n)
        for (Index o = 0; o < K; ++o)
            for (Index y = 0; y < Ho; ++y)
                for (Index xo = 0; xo < Wo; ++xo) {
                    double s = b.defined() ? b.values()[o] : 0.0;
                    for (Index c = 0; c < C; ++c)
                        for (Index i = 0; i < kh; ++i)
                            for (Index j = 0; j < kw; ++j) {
                                const Index iy = y * stride - pad + i, ix = xo * stride - pad + j;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                s += x.values()[((n * C + c) * H + iy) * W + ix] *
                                     k.values()[((o * C + c) * kh + i) * kw + j];
                            }
                    out[((n * K + o) * Ho + y) * Wo + xo] = s;
                }
    return out;
}

// Scatter form of the transposed convolution: every input pixel stamps the
// kernel onto the output at stride 2.
std::vector<double> uconv_oracle(const Tensor<double>& x, const Tensor<double>& k, int pad) {
    const Index N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const Index Cout = k.dim(1), kh = k.dim(2), kw = k.dim(3);
    const Index Ho = 2 * H, Wo = 2 * W;
    std::vector<double> out(static_cast<std::size_t>(N * Cout * Ho * Wo), 0.0);
    for (Index n = 0; n < N; ++n)
        for (Index ci = 0; ci < Cin; ++ci)
            for (Index y = 0; y < H; ++y)
                for (Index xx = 0; xx < W; ++xx)
                    for (Index co = 0; co < Cout; ++co)
                        for (Index i = 0; i < kh; ++i)
                            for (Index j = 0; j < kw; ++j) {
                                const Index oy = y * 2 - pad + i, ox = xx * 2 - pad + j;
                                if (oy < 0 || oy >= Ho || ox < 0 || ox >= Wo) continue;
                                out[((n * Cout + co) * Ho + oy) * Wo + ox] +=
                                    x.values()[((n * Cin + ci) * H + y) * W + xx] *
                                    k.values()[((ci * Cout + co) * kh + i) * kw + j];
                            }
    return out;
}

}  // namespace

TEST(Conv2d, IdentityKernel) {
    std::mt19937_64 rng(1);
    auto x = random_tensor({1, 1, 4, 5}, rng);
    auto k = ones({1, 1, 1, 1});
    auto b = Tensor<double>({1});
    auto y = conv2d(x, k, b, 1, 0);
    ASSERT_EQ(y.shape(), x.shape());
    for (Index i = 0; i < x.size(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(Conv2d, OnesWindowSum) {
    auto y = conv2d(ones({1, 1, 3, 3}), ones({1, 1, 2, 2}), Tensor<double>({1}), 1, 0);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
    for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(Conv2d, MatchesDirectSummation) {
    std::mt19937_64 rng(2);
    auto x = random_tensor({2, 3, 7, 6}, rng);
    auto k = random_tensor({4, 3, 3, 3}, rng);
    auto b = random_tensor({4}, rng);
    for (int stride : {1, 2})
        for (int pad : {0, 1, 2}) {
            auto y = conv2d(x, k, b, stride, pad);
            auto ref = conv_oracle(x, k, b, stride, pad);
            ASSERT_EQ(static_cast<std::size_t>(y.size()), ref.size());
            EXPECT_LT(stylestruct::testing::max_abs_diff<double>(y.values(), ref), 1e-12);
        }
}

TEST(Conv2d, StructureDiscriminatorFirstLayerHalvesResolution) {
    auto y = conv2d(Tensor<double>({1, 3, 72, 72}), Tensor<double>({64, 3, 5, 5}), Tensor<double>({64}), 2, 2);
    EXPECT_EQ(y.shape(), (Shape{1, 64, 36, 36}));
}

TEST(Conv2d, ChannelMismatchIsConfigError) {
    EXPECT_THROW(conv2d(Tensor<double>({1, 3, 8, 8}), Tensor<double>({4, 2, 3, 3}), Tensor<double>(), 1, 1),
                 ConfigError);
    EXPECT_THROW(conv2d(Tensor<double>({1, 1, 2, 2}), Tensor<double>({1, 1, 5, 5}), Tensor<double>(), 1, 0),
                 ConfigError);
}

TEST(ConvTranspose2d, DoublesResolution) {
    auto y = conv_transpose2d(Tensor<double>({1, 64, 9, 9}), Tensor<double>({64, 128, 4, 4}),
                              Tensor<double>({128}), 2, 1);
    EXPECT_EQ(y.shape(), (Shape{1, 128, 18, 18}));
}

TEST(ConvTranspose2d, SinglePixelStampsKernel) {
    std::vector<double> xv(9, 0.0);
    xv[4] = 1.0;  // centre of 3x3
    Tensor<double> x({1, 1, 3, 3}, xv);
    auto k = ones({1, 1, 4, 4});
    auto y = conv_transpose2d(x, k, Tensor<double>(), 2, 1);
    auto ref = uconv_oracle(x, k, 1);
    EXPECT_EQ(stylestruct::testing::max_abs_diff<double>(y.values(), ref), 0.0);
    // Footprint: rows/cols 1..4 of the 6x6 output.
    for (Index r = 0; r < 6; ++r)
        for (Index c = 0; c < 6; ++c) {
            const bool inside = r >= 1 && r <= 4 && c >= 1 && c <= 4;
            EXPECT_EQ(y.values()[r * 6 + c], inside ? 1.0 : 0.0) << r << "," << c;
        }
}

TEST(ConvTranspose2d, MatchesScatterOracle) {
    std::mt19937_64 rng(3);
    auto x = random_tensor({2, 3, 4, 5}, rng);
    auto k = random_tensor({3, 2, 4, 4}, rng);
    auto y = conv_transpose2d(x, k, Tensor<double>(), 2, 1);
    EXPECT_LT(stylestruct::testing::max_abs_diff<double>(y.values(), uconv_oracle(x, k, 1)), 1e-12);
}

TEST(ConvTranspose2d, AdjointOfStridedConv) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        auto k = random_tensor({5, 3, 4, 4}, rng);  // conv: 3 -> 5 channels
        auto x = random_tensor({2, 3, 12, 10}, rng);
        auto y = random_tensor({2, 5, 6, 5}, rng);
        auto cx = conv2d(x, k, Tensor<double>(), 2, 1);
        ASSERT_EQ(cx.shape(), y.shape());
        auto ty = conv_transpose2d(y, k, Tensor<double>(), 2, 1);
        ASSERT_EQ(ty.shape(), x.shape());
        const double lhs = std::inner_product(cx.values().begin(), cx.values().end(), y.values().begin(), 0.0);
        const double rhs = std::inner_product(x.values().begin(), x.values().end(), ty.values().begin(), 0.0);
        EXPECT_LE(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)), 1e-6);
    }
}

TEST(ConvTranspose2d, RejectsNonDoublingGeometry) {
    EXPECT_THROW(conv_transpose2d(Tensor<double>({1, 2, 4, 4}), Tensor<double>({2, 2, 3, 3}), Tensor<double>(), 2, 1),
                 ConfigError);
    EXPECT_THROW(conv_transpose2d(Tensor<double>({1, 2, 4, 4}), Tensor<double>({2, 2, 4, 4}), Tensor<double>(), 3, 1),
                 ConfigError);
}

TEST(Linear, IdentityWeight) {
    std::mt19937_64 rng(5);
    auto x = random_tensor({3, 4}, rng);
    std::vector<double> eye(16, 0.0);
    for (int i = 0; i < 4; ++i) eye[i * 5] = 1.0;
    auto y = linear(x, Tensor<double>({4, 4}, eye), Tensor<double>({4}));
    for (Index i = 0; i < x.size(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(Linear, NoiseToStructureBlock) {
    auto y = linear(Tensor<double>({2, 100}), Tensor<double>({100, 9 * 9 * 64}), Tensor<double>({9 * 9 * 64}));
    auto block = reshape(y, {2, 64, 9, 9});
    EXPECT_EQ(block.shape(), (Shape{2, 64, 9, 9}));
}

TEST(Linear, MatchesTripleLoop) {
    std::mt19937_64 rng(6);
    auto x = random_tensor({2, 3}, rng);
    auto w = random_tensor({3, 2}, rng);
    auto b = random_tensor({2}, rng);
    auto y = linear(x, w, b);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = b.values()[j];
            for (int k = 0; k < 3; ++k) s += x.values()[i * 3 + k] * w.values()[k * 2 + j];
            EXPECT_NEAR(y.values()[i * 2 + j], s, 1e-15);
        }
    EXPECT_THROW(linear(x, Tensor<double>({2, 2}), Tensor<double>()), ConfigError);
}

TEST(Activation, PointValues) {
    Tensor<double> x({3}, {-1.0, 2.0, 0.0});
    auto r = relu(x);
    EXPECT_EQ(r.values()[0], 0.0);
    EXPECT_EQ(r.values()[1], 2.0);
    EXPECT_DOUBLE_EQ(leaky_relu(x).values()[0], -0.2);
    EXPECT_EQ(stylestruct::tanh(x).values()[2], 0.0);
    EXPECT_EQ(sigmoid(x).values()[2], 0.5);
}

TEST(Activation, Ranges) {
    Tensor<float> x({4}, {-50.f, -3.f, 3.f, 50.f});
    auto t = stylestruct::tanh(x);
    for (float v : t.values()) {
        EXPECT_GE(v, -1.f);
        EXPECT_LE(v, 1.f);
    }
    Tensor<double> xd({4}, {-30.0, -3.0, 3.0, 30.0});
    auto sg = sigmoid(xd);
    for (double v : sg.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(BatchNorm, ConstantChannelGivesBeta) {
    Tensor<double> x({4, 2, 3, 3});
    for (Index i = 0; i < x.size(); ++i) x.values()[i] = (i / 9) % 2 ? 5.0 : -2.0;
    Tensor<double> g({2}, {1.5, 0.5}), b({2}, {0.25, -0.75});
    BatchNormStats<double> st(2);
    auto y = batch_norm(x, g, b, st, true);
    for (Index n = 0; n < 4; ++n)
        for (Index c = 0; c < 2; ++c)
            for (Index i = 0; i < 9; ++i) EXPECT_NEAR(y.values()[(n * 2 + c) * 9 + i], b.values()[c], 1e-9);
}

TEST(BatchNorm, TrainOutputStatistics) {
    std::mt19937_64 rng(7);
    auto x = random_tensor({6, 3, 5, 5}, rng);
    for (auto& v : x.values()) v = 3.0 * v + 1.0;
    Tensor<double> g({3}, {2.0, 0.5, 1.0}), b({3}, {-1.0, 0.0, 3.0});
    BatchNormStats<double> st(3);
    auto y = batch_norm(x, g, b, st, true);
    for (Index c = 0; c < 3; ++c) {
        double s = 0, ss = 0;
        const double m = 6 * 25;
        for (Index n = 0; n < 6; ++n)
            for (Index i = 0; i < 25; ++i) s += y.values()[(n * 3 + c) * 25 + i];
        const double mean = s / m;
        for (Index n = 0; n < 6; ++n)
            for (Index i = 0; i < 25; ++i) ss += std::pow(y.values()[(n * 3 + c) * 25 + i] - mean, 2);
        EXPECT_NEAR(mean, b.values()[c], 1e-3);
        EXPECT_NEAR(std::sqrt(ss / m), g.values()[c], 1e-3);
    }
}

TEST(BatchNorm, EvalBeforeTrainingUsesUnitStats) {
    std::mt19937_64 rng(8);
    auto x = random_tensor({2, 2, 2, 2}, rng);
    BatchNormStats<double> st(2);
    auto y = batch_norm(x, ones({2}), Tensor<double>({2}), st, false);
    for (Index i = 0; i < x.size(); ++i) EXPECT_NEAR(y.values()[i], x.values()[i] / std::sqrt(1.0 + 1e-5), 1e-12);
}

TEST(BatchNorm, RunningStatsMomentum) {
    Tensor<double> x({2, 1}, {1.0, 3.0});
    BatchNormStats<double> st(1);
    batch_norm(x, ones({1}), Tensor<double>({1}), st, true);
    EXPECT_NEAR(st.mean[0], 0.1 * 2.0, 1e-12);
    EXPECT_NEAR(st.var[0], 0.9 + 0.1 * 2.0, 1e-12);  // unbiased batch variance 2
}

TEST(BatchNorm, TooFewValuesInTrainMode) {
    BatchNormStats<double> st(3);
    EXPECT_THROW(batch_norm(Tensor<double>({1, 3}), ones({3}), Tensor<double>({3}), st, true), ConfigError);
}

TEST(Softmax, UniformLogits) {
    auto p = softmax_channels(Tensor<double>({2, 40, 3, 3}));
    for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 40.0);
}

TEST(Softmax, HugeLogitIsStable) {
    Tensor<float> z({1, 40, 1, 1});
    z.values()[7] = 1000.f;
    auto p = softmax_channels(z);
    EXPECT_NEAR(p.values()[7], 1.f, 1e-6);
    for (float v : p.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Softmax, MatchesExtendedPrecisionAndSumsToOne) {
    std::mt19937_64 rng(9);
    auto z = random_tensor({2, 40, 4, 3}, rng);
    for (auto& v : z.values()) v *= 8.0;
    auto p = softmax_channels(z);
    const Index HW = 12;
    for (Index n = 0; n < 2; ++n)
        for (Index i = 0; i < HW; ++i) {
            long double s = 0;
            for (Index c = 0; c < 40; ++c) s += std::exp(static_cast<long double>(z.values()[(n * 40 + c) * HW + i]));
            double total = 0;
            for (Index c = 0; c < 40; ++c) {
                const Index k = (n * 40 + c) * HW + i;
                const long double ref = std::exp(static_cast<long double>(z.values()[k])) / s;
                EXPECT_NEAR(p.values()[k], static_cast<double>(ref), 1e-12);
                EXPECT_GT(p.values()[k], 0.0);
                total += p.values()[k];
            }
            EXPECT_NEAR(total, 1.0, 1e-6);
        }
    // Shift invariance per pixel.
    auto shifted = z.clone();
    for (Index c = 0; c < 40; ++c) shifted.values()[c * HW] += 3.5;
    auto q = softmax_channels(shifted);
    for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(q.values()[i], p.values()[i], 1e-6);
}

TEST(Bilinear, ConstantStaysConstant) {
    Tensor<double> x({1, 2, 3, 3}, std::vector<double>(18, 0.7));
    auto y = resize_bilinear(x, 8, 8);
    for (double v : y.values()) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(Bilinear, StructureToStyleResolution) {
    auto y = resize_bilinear(Tensor<float>({2, 3, 72, 72}), 128, 128);
    EXPECT_EQ(y.shape(), (Shape{2, 3, 128, 128}));
}

TEST(Bilinear, TwoByTwoToFourByFour) {
    Tensor<double> x({1, 1, 2, 2}, {0, 1, 2, 3});
    auto y = upsample_bilinear(x, 2);
    // Half-pixel centres: source coordinates 0, .25, .75, 1 along each axis
    // (the first is clamped from -0.25); value = 2*sy + sx.
    const double s[4] = {0.0, 0.25, 0.75, 1.0};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(y.values()[r * 4 + c], 2 * s[r] + s[c], 1e-15);
}

TEST(Bilinear, DownsamplingRejected) {
    EXPECT_THROW(resize_bilinear(Tensor<double>({1, 1, 8, 8}), 4, 8), ConfigError);
}

TEST(Concat, Shapes) {
    auto y = concat_channels(Tensor<float>({1, 128, 32, 32}), Tensor<float>({1, 64, 32, 32}));
    EXPECT_EQ(y.shape(), (Shape{1, 192, 32, 32}));
    auto d = concat_channels(Tensor<float>({2, 3, 128, 128}), Tensor<float>({2, 3, 128, 128}));
    EXPECT_EQ(d.shape(), (Shape{2, 6, 128, 128}));
    std::mt19937_64 rng(10);
    auto x = random_tensor({2, 3, 4, 4}, rng);
    auto e = concat_channels(x, Tensor<double>({2, 0, 4, 4}));
    EXPECT_EQ(e.shape(), x.shape());
    for (Index i = 0; i < x.size(); ++i) EXPECT_EQ(e.values()[i], x.values()[i]);
    EXPECT_THROW(concat_channels(Tensor<double>({1, 1, 4, 4}), Tensor<double>({1, 1, 4, 5})), ConfigError);
}

TEST(Graph, FrozenLeavesGetNoGradient) {
    std::mt19937_64 rng(11);
    auto x = random_tensor({2, 3}, rng);  // requires_grad = false
    auto w = random_tensor({3, 2}, rng, 0.0, true);
    auto loss = sum(stylestruct::tanh(linear(x, w, Tensor<double>())));
    loss.backward();
    EXPECT_TRUE(x.grad().empty());
    EXPECT_EQ(w.grad().size(), 6u);
}

TEST(Graph, DetachCutsGradient) {
    std::mt19937_64 rng(12);
    auto w = random_tensor({4}, rng, 0.0, true);
    auto y = scale(w, 3.0).detach();
    auto loss = sum(mul(y, y));
    EXPECT_FALSE(loss.requires_grad());
    loss.backward();
    EXPECT_TRUE(w.grad().empty());
}

TEST(Graph, SharedSubexpressionAccumulates) {
    Tensor<double> w({1}, {3.0}, true);
    auto a = scale(w, 2.0);
    auto loss = sum(add(a, mul(a, a)));  // 2w + 4w^2 -> d/dw = 2 + 8w
    loss.backward();
    EXPECT_DOUBLE_EQ(w.grad()[0], 2.0 + 8.0 * 3.0);
}

TEST(GradCheck, LinearIsExact) {
    std::mt19937_64 rng(13);
    auto x = random_tensor({3, 5}, rng), w = random_tensor({5, 4}, rng), b = random_tensor({4}, rng);
    auto r = grad_check([&] { return readout(linear(x, w, b), 99); }, {{"x", x}, {"w", w}, {"b", b}}, 1e-3);
    EXPECT_LE(r.max_rel_error, 1e-7);
}

TEST(GradCheck, TanhSmallStep) {
    std::mt19937_64 rng(14);
    auto x = random_tensor({20}, rng);
    for (auto& v : x.values()) v *= 2.0;
    auto r = grad_check([&] { return readout(stylestruct::tanh(x), 7); }, {{"x", x}}, 1e-4);
    EXPECT_LE(r.max_rel_error, 1e-5);
}

TEST(GradCheck, DetectsWrongBackward) {
    Tensor<double> x({3}, {0.3, -0.2, 0.5});
    auto broken = [&] {
        std::vector<double> v(x.values().begin(), x.values().end());
        for (auto& e : v) e = e * e;
        auto* xn = x.node();
        return sum(Tensor<double>::make_result(x.shape(), v, {x}, "square_wrong", [xn](detail::Node<double>& o) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i] * xn->value[i];  // missing 2x
        }));
    };
    EXPECT_GT(grad_check(broken, {{"x", x}}, 1e-4).max_rel_error, 1e-2);
}

// Every differentiable op at 10 random points, step 1e-3, double precision.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, TenRandomPoints) {
    const int op = GetParam();
    for (std::uint64_t point = 0; point < 10; ++point) {
        std::mt19937_64 rng(1000 * op + point);
        GradCheckResult r;
        switch (op) {
            case 0: {
                auto x = random_tensor({2, 3, 6, 5}, rng), k = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
                r = grad_check([&] { return readout(conv2d(x, k, b, 2, 1), point); }, {{"x", x}, {"k", k}, {"b", b}}, 1e-3);
                break;
            }
            case 1: {
                auto x = random_tensor({2, 3, 3, 4}, rng), k = random_tensor({3, 2, 4, 4}, rng), b = random_tensor({2}, rng);
                r = grad_check([&] { return readout(conv_transpose2d(x, k, b, 2, 1), point); },
                               {{"x", x}, {"k", k}, {"b", b}}, 1e-3);
                break;
            }
            case 2: {
                auto x = random_tensor({3, 5}, rng), w = random_tensor({5, 2}, rng), b = random_tensor({2}, rng);
                r = grad_check([&] { return readout(linear(x, w, b), point); }, {{"x", x}, {"w", w}, {"b", b}}, 1e-3);
                break;
            }
            case 3:
            case 4:
            case 5:
            case 6: {
                const Activation kinds[] = {Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid};
                auto x = random_tensor({24}, rng, 0.01);
                r = grad_check([&] { return readout(activate(x, kinds[op - 3]), point); }, {{"x", x}}, 1e-3);
                break;
            }
            case 7: {
                auto x = random_tensor({3, 2, 3, 3}, rng), g = random_tensor({2}, rng), b = random_tensor({2}, rng);
                BatchNormStats<double> st(2);
                r = grad_check([&] { return readout(batch_norm(x, g, b, st, true), point); },
                               {{"x", x}, {"gamma", g}, {"beta", b}}, 1e-3);
                break;
            }
            case 8: {
                auto x = random_tensor({2, 2, 3, 3}, rng), g = random_tensor({2}, rng), b = random_tensor({2}, rng);
                BatchNormStats<double> st(2);
                st.mean = {0.3, -0.1};
                st.var = {0.5, 2.0};
                r = grad_check([&] { return readout(batch_norm(x, g, b, st, false), point); },
                               {{"x", x}, {"gamma", g}, {"beta", b}}, 1e-3);
                break;
            }
            case 9: {
                auto z = random_tensor({2, 5, 2, 3}, rng);
                r = grad_check([&] { return readout(softmax_channels(z), point); }, {{"z", z}}, 1e-3);
                break;
            }
            case 10: {
                auto z = random_tensor({2, 5, 2, 3}, rng);
                std::vector<std::int32_t> lbl(12);
                for (auto& l : lbl) l = static_cast<std::int32_t>(1 + rng() % 5);
                r = grad_check([&] { return softmax_cross_entropy_pixels(z, lbl); }, {{"z", z}}, 1e-3);
                break;
            }
            case 11: {
                auto x = random_tensor({1, 2, 3, 4}, rng);
                r = grad_check([&] { return readout(resize_bilinear(x, 7, 9), point); }, {{"x", x}}, 1e-3);
                break;
            }
            case 12: {
                auto a = random_tensor({2, 2, 3, 3}, rng), b = random_tensor({2, 1, 3, 3}, rng);
                r = grad_check([&] { return readout(concat_channels(a, b), point); }, {{"a", a}, {"b", b}}, 1e-3);
                break;
            }
            case 13: {
                // Distinct values spaced wider than the probe keep the argmax fixed.
                std::vector<double> v(2 * 2 * 5 * 5);
                std::iota(v.begin(), v.end(), 0.0);
                std::shuffle(v.begin(), v.end(), rng);
                for (auto& e : v) e *= 0.01;
                Tensor<double> x({2, 2, 5, 5}, v);
                r = grad_check([&] { return readout(max_pool2d(x, 3, 2, 1), point); }, {{"x", x}}, 1e-3);
                break;
            }
            case 14: {
                auto a = random_tensor({2, 6}, rng), b = random_tensor({2, 6}, rng);
                r = grad_check([&] { return readout(reshape(batch_slice(add(mul(a, b), scale(a, 0.5)), 1, 2), {3, 2}), point); },
                               {{"a", a}, {"b", b}}, 1e-3);
                break;
            }
        }
        EXPECT_LE(r.max_rel_error, 1e-3) << "op " << op << " point " << point << " worst " << r.worst_input << "["
                                          << r.worst_index << "]";
    }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, 15));

TEST(Determinism, RepeatedForwardIsBitIdentical) {
    std::mt19937_64 rng(15);
    auto x = random_tensor<float>({2, 3, 8, 8}, rng), k = random_tensor<float>({4, 3, 3, 3}, rng);
    auto a = conv2d(x, k, Tensor<float>(), 1, 1);
    auto b = conv2d(x, k, Tensor<float>(), 1, 1);
    for (Index i = 0; i < a.size(); ++i) EXPECT_EQ(a.values()[i], b.values()[i]);
}
