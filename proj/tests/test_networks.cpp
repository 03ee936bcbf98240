#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "stylestruct/error.hpp"
#include "stylestruct/gradcheck.hpp"
#include "stylestruct/network.hpp"
#include "test_util.hpp"

using namespace stylestruct;
using stylestruct::testing::random_tensor;

namespace {

const Scale kScales[] = {{1}, {2}, {4}};

// Input side of every conv/uconv layer in order, as listed in the
// architecture table.
std::vector<Index> weight_layer_inputs(const NetworkSpec& spec) {
    const auto rows = shape_audit(spec);
    std::vector<Index> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (spec.layers[i].kind == LayerKind::Conv || spec.layers[i].kind == LayerKind::UConv)
            out.push_back(rows[i].in_shape[1]);
    return out;
}

std::map<std::string, Tensor<float>> inputs_for(const NetworkSpec& spec, Index batch, std::mt19937_64& rng) {
    std::map<std::string, Tensor<float>> in;
    for (const auto& l : spec.layers) {
        if (l.kind != LayerKind::Input) continue;
        Shape s = l.height > 0 ? Shape{batch, l.channels, l.height, l.width} : Shape{batch, l.channels};
        in.emplace(l.name, random_tensor<float>(s, rng));
    }
    return in;
}

Shape batched(Index n, const Shape& s) {
    Shape out{n};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

}  // namespace

TEST(Scale, ParseAndSizes) {
    EXPECT_EQ(Scale::parse("1").divisor, 1);
    EXPECT_EQ(Scale::parse("1/2").divisor, 2);
    EXPECT_EQ(Scale::parse("0.25").divisor, 4);
    EXPECT_THROW(Scale::parse("1/3"), ConfigError);
    EXPECT_EQ(Scale{4}.structure_size(), 18);
    EXPECT_EQ(Scale{4}.image_size(), 32);
    EXPECT_EQ(Scale{4}.channels(64), 16);
    EXPECT_EQ(Scale{4}.channels(3 * 8), 8);
}

TEST(StructureGenerator, TableInputSizes) {
    auto spec = build_structure_generator(Scale{1});
    EXPECT_EQ(weight_layer_inputs(spec), (std::vector<Index>{9, 18, 18, 18, 18, 18, 36, 36, 72}));
    EXPECT_EQ(output_shape(spec), (Shape{3, 72, 72}));
    EXPECT_EQ(spec.layer("fc1").channels, 9 * 9 * 64);
    EXPECT_EQ(spec.count(LayerKind::UConv), 3u);
    const std::vector<Index> kernels_expected = {4, 3, 3, 3, 3, 4, 3, 4, 5};
    const std::vector<Index> widths_expected = {128, 128, 256, 512, 512, 256, 128, 64, 3};
    std::vector<Index> kernels, widths;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::UConv) {
            kernels.push_back(l.kernel);
            widths.push_back(l.channels);
        }
    EXPECT_EQ(kernels, kernels_expected);
    EXPECT_EQ(widths, widths_expected);
}

TEST(StructureGenerator, ScaledOutputs) {
    EXPECT_EQ(output_shape(build_structure_generator(Scale{2})), (Shape{3, 36, 36}));
    EXPECT_EQ(output_shape(build_structure_generator(Scale{4})), (Shape{3, 18, 18}));
}

TEST(StructureGenerator, BatchNormAfterEveryLayerButLast) {
    for (Scale s : kScales) {
        auto spec = build_structure_generator(s);
        std::vector<std::string> weights;
        for (std::size_t i = 0; i < spec.layers.size(); ++i) {
            const auto& l = spec.layers[i];
            if (l.kind != LayerKind::Conv && l.kind != LayerKind::UConv && l.kind != LayerKind::FullyConnected)
                continue;
            weights.push_back(l.name);
        }
        for (std::size_t w = 0; w + 1 < weights.size(); ++w)
            EXPECT_NO_THROW(spec.layer("bn_" + (weights[w] == "fc1" ? std::string("reshape1") : weights[w])))
                << weights[w];
        EXPECT_THROW(spec.layer("bn_" + weights.back()), ConfigError);
        EXPECT_EQ(spec.layers.back().act, Activation::Tanh);
    }
}

TEST(StructureDiscriminator, TableInputSizes) {
    auto spec = build_structure_discriminator(Scale{1});
    EXPECT_EQ(weight_layer_inputs(spec), (std::vector<Index>{72, 36, 36, 18, 9}));
    EXPECT_EQ(output_shape(spec), (Shape{1}));
    EXPECT_EQ(spec.count(LayerKind::BatchNorm), 0u);
    EXPECT_EQ(spec.layers.back().act, Activation::Sigmoid);
    EXPECT_EQ(weight_layer_inputs(build_structure_discriminator(Scale{2})).front(), 36);
}

TEST(StyleDiscriminator, TableInputSizes) {
    auto spec = build_style_discriminator(Scale{1});
    EXPECT_EQ(weight_layer_inputs(spec), (std::vector<Index>{128, 64, 32, 16, 8}));
    EXPECT_EQ(shape_audit(spec)[2].out_shape, (Shape{6, 128, 128}));
    EXPECT_EQ(output_shape(spec), (Shape{1}));
    EXPECT_EQ(spec.count(LayerKind::BatchNorm), 0u);
    EXPECT_EQ(weight_layer_inputs(build_style_discriminator(Scale{4})).front(), 32);
}

TEST(StyleGenerator, ConcatAndOutput) {
    auto spec = build_style_generator(Scale{1});
    const auto rows = shape_audit(spec);
    for (const auto& r : rows)
        if (r.layer == "concat") {
            EXPECT_EQ(r.out_shape, (Shape{192, 32, 32}));
        }
    EXPECT_EQ(output_shape(spec), (Shape{3, 128, 128}));
    EXPECT_EQ(output_shape(build_style_generator(Scale{4})), (Shape{3, 32, 32}));
    EXPECT_EQ(spec.layers.back().act, Activation::Tanh);
}

TEST(Fcn, LogitShapes) {
    EXPECT_EQ(output_shape(build_fcn(Scale{1})), (Shape{40, 128, 128}));
    EXPECT_EQ(output_shape(build_fcn(Scale{4})), (Shape{40, 32, 32}));
    auto spec = build_fcn(Scale{1});
    EXPECT_EQ(spec.layer("fc6").channels, 1024);
    EXPECT_EQ(spec.layer("fc7").channels, 512);
    EXPECT_EQ(spec.layer("score").kind, LayerKind::UConv);
    const auto rows = shape_audit(spec);
    EXPECT_EQ(rows[1].out_shape, (Shape{3, 512, 512}));
}

TEST(ShapeAudit, MalformedStrideNamesLayer) {
    auto spec = build_structure_generator(Scale{1});
    for (auto& l : spec.layers)
        if (l.name == "uconv7") l.stride = 3;
    try {
        shape_audit(spec);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("uconv7"), std::string::npos) << e.what();
    }
}

TEST(ShapeAudit, SpecTableListsResolvedPadding) {
    const auto text = format_spec_table(build_structure_discriminator(Scale{1}));
    EXPECT_NE(text.find("Padding"), std::string::npos);
    EXPECT_NE(text.find("Input Size"), std::string::npos);
}

TEST(Params, DeterministicCountsAndInit) {
    for (Scale s : kScales)
        for (auto k : {NetworkKind::StructureGenerator, NetworkKind::StructureDiscriminator,
                       NetworkKind::StyleGenerator, NetworkKind::StyleDiscriminator, NetworkKind::Fcn}) {
            auto spec = build_network(k, s);
            auto a = init_params<float>(spec, 7), b = init_params<float>(spec, 7);
            ASSERT_EQ(a.count(), b.count());
            ASSERT_EQ(a.tensors.size(), b.tensors.size());
            std::set<std::string> names;
            for (std::size_t i = 0; i < a.tensors.size(); ++i) {
                EXPECT_TRUE(names.insert(a.tensors[i].first).second) << a.tensors[i].first;
                for (Index j = 0; j < a.tensors[i].second.size(); ++j)
                    ASSERT_EQ(a.tensors[i].second.values()[j], b.tensors[i].second.values()[j]);
            }
        }
    // Structure D at full scale: conv weights + biases + fc6.
    const Index expected = (64 * 3 * 25 + 64) + (128 * 64 * 25 + 128) + (256 * 128 * 9 + 256) +
                           (512 * 256 * 9 + 512) + (128 * 512 * 9 + 128) + (128 * 9 * 9 + 1);
    EXPECT_EQ(init_params<float>(build_structure_discriminator(Scale{1}), 1).count(), expected);
}

TEST(Params, InitStatistics) {
    auto p = init_params<double>(build_style_discriminator(Scale{1}), 3);
    const auto& w = p.at("conv4.weight");
    double s = 0, ss = 0;
    for (double v : w.values()) {
        s += v;
        ss += v * v;
    }
    const double n = static_cast<double>(w.size());
    EXPECT_NEAR(s / n, 0.0, 1e-3);
    EXPECT_NEAR(std::sqrt(ss / n), 0.02, 1e-3);
    for (double v : p.at("conv4.bias").values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, AllNetworksAtFullScale) {
    std::mt19937_64 rng(1);
    for (auto k : {NetworkKind::StructureGenerator, NetworkKind::StructureDiscriminator, NetworkKind::StyleGenerator,
                   NetworkKind::StyleDiscriminator, NetworkKind::Fcn}) {
        auto spec = build_network(k, Scale{1});
        auto p = init_params<float>(spec, 2);
        auto y = forward(spec, p, inputs_for(spec, 2, rng), Mode::Train);
        EXPECT_EQ(y.shape(), batched(2, output_shape(spec))) << spec.name();
        for (float v : y.values()) ASSERT_TRUE(std::isfinite(v)) << spec.name();
    }
}

TEST(Forward, ZeroNoiseGeneratorIsBounded) {
    for (Scale s : kScales) {
        auto spec = build_structure_generator(s);
        auto p = init_params<float>(spec, 3);
        auto y = forward(spec, p, {{"z", Tensor<float>({2, kNoiseDim})}}, Mode::Eval);
        for (float v : y.values()) {
            ASSERT_TRUE(std::isfinite(v));
            ASSERT_GE(v, -1.f);
            ASSERT_LE(v, 1.f);
        }
    }
}

TEST(Forward, DiscriminatorScoresInUnitInterval) {
    std::mt19937_64 rng(4);
    for (auto k : {NetworkKind::StructureDiscriminator, NetworkKind::StyleDiscriminator}) {
        auto spec = build_network(k, Scale{2});
        auto p = init_params<float>(spec, 5);
        auto y = forward(spec, p, inputs_for(spec, 3, rng), Mode::Train);
        for (float v : y.values()) {
            EXPECT_GT(v, 0.f);
            EXPECT_LT(v, 1.f);
        }
    }
}

TEST(Forward, EvalModeIsRepeatable) {
    std::mt19937_64 rng(6);
    auto spec = build_style_generator(Scale{4});
    auto p = init_params<float>(spec, 7);
    auto in = inputs_for(spec, 2, rng);
    auto a = forward(spec, p, in, Mode::Eval);
    auto b = forward(spec, p, in, Mode::Eval);
    for (Index i = 0; i < a.size(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]);
}

TEST(Forward, WrongInputShapeIsConfigError) {
    auto spec = build_style_discriminator(Scale{4});
    auto p = init_params<float>(spec, 1);
    EXPECT_THROW(forward(spec, p, {{"normals", Tensor<float>({1, 3, 16, 16})}, {"image", Tensor<float>({1, 3, 32, 32})}},
                         Mode::Train),
                 ConfigError);
    EXPECT_THROW(forward(spec, p, {{"normals", Tensor<float>({1, 3, 32, 32})}}, Mode::Train), ConfigError);
}

// Scalar-loss compositions over each whole network, double precision. The
// small step keeps probes from crossing ReLU kinks deep in the graph.
class NetworkGradient : public ::testing::TestWithParam<NetworkKind> {};

TEST_P(NetworkGradient, CentralDifferences) {
    auto spec = build_network(GetParam(), Scale{4});
    auto p = init_params<double>(spec, 11);
    std::mt19937_64 rng(12);
    std::map<std::string, Tensor<double>> in;
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::Input)
            in.emplace(l.name, random_tensor(l.height > 0 ? Shape{2, l.channels, l.height, l.width} : Shape{2, l.channels}, rng));
    std::vector<std::pair<std::string, Tensor<double>>> probes;
    for (const auto& [n, t] : p.tensors) probes.emplace_back(n, t);
    for (auto& [n, t] : in) probes.emplace_back("input:" + n, t);
    auto r = grad_check([&] { return stylestruct::testing::readout(forward(spec, p, in, Mode::Train), 5); }, probes, 1e-6, 2);
    EXPECT_LE(r.max_rel_error, 1e-3) << spec.name() << " worst " << r.worst_input << "[" << r.worst_index << "]";
    EXPECT_GT(r.coords_checked, probes.size());
}

INSTANTIATE_TEST_SUITE_P(AllNetworks, NetworkGradient,
                         ::testing::Values(NetworkKind::StructureGenerator, NetworkKind::StructureDiscriminator,
                                           NetworkKind::StyleGenerator, NetworkKind::StyleDiscriminator,
                                           NetworkKind::Fcn),
                         [](const auto& info) { return std::string(network_kind_name(info.param)); });
