#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stylestruct/error.hpp"
#include "stylestruct/losses.hpp"
#include "stylestruct/trainer.hpp"

namespace fs = std::filesystem;
using namespace stylestruct;
using NK = NetworkKind;

namespace {

std::string fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("stylestruct_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

TrainConfig small_config(const std::string& out) {
    TrainConfig c;
    c.scale = Scale{4};
    c.batch_size = 4;
    c.data_count = 16;
    c.test_count = 4;
    c.codebook_scenes = 4;
    c.iters_fcn = 3;
    c.iters_structure = 4;
    c.iters_style = 2;
    c.iters_style_finetune = 2;
    c.iters_joint = 3;
    c.checkpoint_every = 0;
    c.fcn_eval_every = 0;
    c.out_dir = out;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_params(const NetworkParams<float>& a, const NetworkParams<float>& b) {
    if (a.tensors.size() != b.tensors.size()) return false;
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        const auto x = a.tensors[i].second.values(), y = b.tensors[i].second.values();
        if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
    return true;
}

Tensor<float> normals_batch(Index n, Index side, std::uint64_t seed) {
    DataConfig dc;
    dc.count = n;
    dc.seed = seed;
    const auto ds = SceneDataset::generate(dc);
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) idx.push_back(i);
    const auto b = make_batch(ds, idx);
    return side == ds.structure_side ? b.structure_normals : b.normals;
}

}  // namespace

// ---- Adam --------------------------------------------------------------

TEST(Adam, FirstStepMovesByLrTimesSign) {
    NetworkParams<float> p;
    p.tensors.emplace_back("w", Tensor<float>({3}, {0.5f, -0.25f, 1.f}, true));
    const std::vector<float> g = {0.3f, -2.f, 1e-3f};
    std::copy(g.begin(), g.end(), p.at("w").mutable_grad().begin());
    AdamState s;
    s.lr = 0.01;
    adam_step(p, s);
    const auto w = p.at("w").values();
    const float start[3] = {0.5f, -0.25f, 1.f};
    for (int i = 0; i < 3; ++i) {
        const double expect = start[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
        EXPECT_NEAR(w[i], expect, 1e-6);
    }
    EXPECT_EQ(s.step, 1u);
}

TEST(Adam, MatchesScalarReferenceOverSeveralSteps) {
    NetworkParams<float> p;
    p.tensors.emplace_back("w", Tensor<float>({1}, {0.2f}, true));
    AdamState s;
    s.lr = 0.05;
    long double w = 0.2L, m = 0, v = 0;
    const double grads[5] = {0.5, -0.1, 0.7, 0.0, -1.3};
    for (int t = 1; t <= 5; ++t) {
        p.at("w").zero_grad();
        p.at("w").mutable_grad()[0] = static_cast<float>(grads[t - 1]);
        adam_step(p, s);
        m = 0.5L * m + 0.5L * grads[t - 1];
        v = 0.999L * v + 0.001L * grads[t - 1] * grads[t - 1];
        const long double mh = m / (1 - std::pow(0.5L, t)), vh = v / (1 - std::pow(0.999L, t));
        w -= 0.05L * mh / (std::sqrt(vh) + 1e-8L);
        EXPECT_NEAR(p.at("w").values()[0], static_cast<double>(w), 1e-6) << "step " << t;
    }
}

TEST(Adam, ZeroLearningRateAndZeroGradientLeaveParamsUnchanged) {
    NetworkParams<float> p;
    p.tensors.emplace_back("a", Tensor<float>({2}, {1.f, 2.f}, true));
    p.tensors.emplace_back("b", Tensor<float>({2}, {3.f, 4.f}, true));
    p.at("a").mutable_grad()[0] = 5.f;
    AdamState s;
    s.lr = 0;
    adam_step(p, s);
    EXPECT_EQ(p.at("a").values()[0], 1.f);
    AdamState fresh;
    NetworkParams<float> q;
    q.tensors.emplace_back("c", Tensor<float>({2}, {1.f, 2.f}, true));
    adam_step(q, fresh);
    EXPECT_EQ(q.at("c").values()[0], 1.f);
    EXPECT_EQ(q.at("c").values()[1], 2.f);
}

TEST(Adam, FrozenTensorsAreSkipped) {
    NetworkParams<float> p;
    p.tensors.emplace_back("w", Tensor<float>({1}, {1.f}, true));
    p.at("w").mutable_grad()[0] = 1.f;
    p.set_trainable(false);
    AdamState s;
    adam_step(p, s);
    EXPECT_EQ(p.at("w").values()[0], 1.f);
    EXPECT_TRUE(s.m.empty());
}

TEST(Adam, NonFiniteGradientAbortsNamingTheTensor) {
    NetworkParams<float> p;
    p.tensors.emplace_back("good", Tensor<float>({1}, {1.f}, true));
    p.tensors.emplace_back("conv3.weight", Tensor<float>({2}, {1.f, 1.f}, true));
    p.at("good").mutable_grad()[0] = 1.f;
    p.at("conv3.weight").mutable_grad()[0] = 0.25f;
    p.at("conv3.weight").mutable_grad()[1] = std::nanf("");
    AdamState s;
    try {
        adam_step(p, s);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("conv3.weight"), std::string::npos) << msg;
        EXPECT_NE(msg.find("0.25"), std::string::npos) << msg;
    }
    EXPECT_EQ(p.at("good").values()[0], 1.f);
    EXPECT_EQ(s.step, 0u);
}

// ---- config ------------------------------------------------------------

TEST(Config, ParsesKeysCommentsAndWhitespace) {
    const auto c = parse_config("# desk run\nscale = 1/2\n  seed=7  \nlambda = 0.25 # weight\n\nbatch_size = 16\n");
    EXPECT_EQ(c.scale.divisor, 2);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_DOUBLE_EQ(c.lambda, 0.25);
    EXPECT_EQ(c.batch_size, 16);
}

TEST(Config, DefaultsFollowPublishedSettings) {
    const TrainConfig c;
    EXPECT_DOUBLE_EQ(c.lr_structure, 2e-4);
    EXPECT_DOUBLE_EQ(c.lr_style, 2e-4);
    EXPECT_DOUBLE_EQ(c.lambda, 0.1);
    EXPECT_EQ(c.batch_size, 128);
    EXPECT_DOUBLE_EQ(c.lr_joint_style / c.lr_joint_structure, 10.0);
    EXPECT_DOUBLE_EQ(c.divergence_ceiling, 15.0);
    EXPECT_EQ(c.divergence_patience, 100u);
}

TEST(Config, ErrorsNameTheKeyAndLine) {
    try {
        parse_config("seed = 1\nlearning_rate = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("learning_rate"), std::string::npos);
        EXPECT_NE(msg.find("line 2"), std::string::npos);
    }
    EXPECT_THROW(parse_config("lambda = abc\n"), ConfigError);
    EXPECT_THROW(parse_config("seed = -3\n"), ConfigError);
    EXPECT_THROW(parse_config("just words\n"), ConfigError);
    EXPECT_THROW(parse_config("scale = 1/3\n"), ConfigError);
}

TEST(Config, ValidateRejectsOddBatchAndTinyData) {
    TrainConfig c;
    c.batch_size = 7;
    EXPECT_THROW(c.validate(), ConfigError);
    c.batch_size = 8;
    c.data_count = 4;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, SerializeRoundTripsAndHashTracksValues) {
    TrainConfig c;
    c.lambda = 0.05;
    c.scale = Scale{2};
    c.iters_joint = 17;
    const auto back = parse_config(c.serialize());
    EXPECT_EQ(back.serialize(), c.serialize());
    EXPECT_EQ(back.hash(), c.hash());
    auto d = c;
    d.lambda = 0.06;
    EXPECT_NE(d.hash(), c.hash());
    d = c;
    d.out_dir = "elsewhere";
    EXPECT_EQ(d.hash(), c.hash());
}

// ---- archive -----------------------------------------------------------

TEST(Archive, EncodeDecodeIsBitwise) {
    Archive a;
    a.put_f32("w", {2, 2}, {1.f, -0.f, 3.5e-20f, std::numeric_limits<float>::max()});
    a.put_f64("d", {1}, {0.1});
    a.put_i32("labels", {1, 40, 7});
    a.put_u64("step", {123456789012345ULL});
    a.put_string("meta/phase", "joint");
    const auto bytes = a.encode();
    const auto b = Archive::decode(bytes);
    EXPECT_EQ(b.encode(), bytes);
    EXPECT_EQ(b.string("meta/phase"), "joint");
    EXPECT_EQ(b.u64_scalar("step"), 123456789012345ULL);
    EXPECT_EQ(b.i32("labels")[1], 40);
    EXPECT_EQ(b.entry("w").shape, (Shape{2, 2}));
    EXPECT_TRUE(std::signbit(b.f32("w")[1]));
}

TEST(Archive, HeaderIsMagicThenVersion) {
    Archive a;
    a.put_u64("x", {1});
    const auto bytes = a.encode();
    ASSERT_GE(bytes.size(), 12u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 7), "STSCKPT");
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes[9] | bytes[10] | bytes[11], 0);
}

TEST(Archive, EveryTruncationIsRejectedWithTheField) {
    Archive a;
    a.put_f32("structure_g/param/fc1.weight", {3}, {1.f, 2.f, 3.f});
    a.put_u64("meta/iteration", {5});
    const auto bytes = a.encode();
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
        try {
            Archive::decode(cut);
            FAIL() << "prefix " << n << " accepted";
        } catch (const DataError& e) {
            const std::string msg = e.what();
            EXPECT_NE(msg.find("truncated in field '"), std::string::npos) << msg;
        }
    }
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 60);
    try {
        Archive::decode(cut);
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("structure_g/param/fc1.weight"), std::string::npos) << e.what();
    }
}

TEST(Archive, RejectsWrongVersionMagicAndTrailingBytes) {
    Archive a;
    a.put_u64("x", {1});
    auto bytes = a.encode();
    auto v = bytes;
    v[8] = 2;
    try {
        Archive::decode(v);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
    }
    v = bytes;
    v[0] = 'X';
    EXPECT_THROW(Archive::decode(v), DataError);
    v = bytes;
    v.push_back(0);
    EXPECT_THROW(Archive::decode(v), DataError);
}

TEST(Archive, SaveIsAtomicAndLoadsBack) {
    const auto dir = fresh_dir("archive");
    const auto path = dir + "/sub/x.ckpt";
    Archive a;
    a.put_f64("v", {2}, {1.5, -2.5});
    a.save(path);
    EXPECT_TRUE(fs::exists(path));
    EXPECT_FALSE(fs::exists(path + ".tmp"));
    EXPECT_EQ(Archive::load(path).encode(), a.encode());
    EXPECT_THROW(Archive::load(dir + "/missing.ckpt"), DataError);
}

TEST(Archive, TypedReadsCheckTypeAndPresence) {
    Archive a;
    a.put_f32("w", {1}, {1.f});
    EXPECT_THROW(a.f64("w"), DataError);
    EXPECT_THROW(a.f32("nope"), DataError);
}

// ---- model state -------------------------------------------------------

TEST(ModelState, StoreRestoreRoundTripIsBitwise) {
    Model m = Model::create(Scale{4}, 3);
    // Give every piece of state a non-default value.
    structure_step(m, normals_batch(2, 18, 1), uniform_noise(2, 9));
    Archive a;
    for (NK k : kAllNetworks) m.store(a, k);
    m.codebook = build_codebook(1, Scale{4}, 2, 1);
    m.store_codebook(a);
    const auto bytes = a.encode();

    Model r = Model::create(Scale{4}, 99);
    const auto back = Archive::decode(bytes);
    for (NK k : kAllNetworks) r.restore(back, k);
    ASSERT_TRUE(r.restore_codebook(back));
    for (NK k : kAllNetworks) {
        EXPECT_TRUE(same_params(m.net(k).params, r.net(k).params)) << network_kind_name(k);
        EXPECT_EQ(m.net(k).adam.step, r.net(k).adam.step);
        EXPECT_EQ(m.net(k).adam.m, r.net(k).adam.m);
        EXPECT_EQ(m.net(k).adam.v, r.net(k).adam.v);
        for (const auto& [name, s] : m.net(k).params.bn_stats) {
            EXPECT_EQ(s.mean, r.net(k).params.bn_stats.at(name).mean);
            EXPECT_EQ(s.var, r.net(k).params.bn_stats.at(name).var);
        }
    }
    EXPECT_EQ(r.codebook->centroids, m.codebook->centroids);
    Archive again;
    for (NK k : kAllNetworks) r.store(again, k);
    r.store_codebook(again);
    EXPECT_EQ(again.encode(), bytes);
}

TEST(ModelState, RestoreAtWrongScaleFailsWithoutPartialState) {
    Model big = Model::create(Scale{2}, 1);
    Archive a;
    big.store(a, NK::StructureDiscriminator);
    Model small = Model::create(Scale{4}, 1);
    const auto before = small.net(NK::StructureDiscriminator).params.clone();
    EXPECT_THROW(small.restore(a, NK::StructureDiscriminator), DataError);
    EXPECT_TRUE(same_params(before, small.net(NK::StructureDiscriminator).params));
}

TEST(ModelState, CloneSharesNoStorage) {
    Model m = Model::create(Scale{4}, 1);
    Model c = m.clone();
    c.net(NK::Fcn).params.tensors[0].second.values()[0] += 1.f;
    EXPECT_NE(c.net(NK::Fcn).params.tensors[0].second.values()[0], m.net(NK::Fcn).params.tensors[0].second.values()[0]);
}

TEST(Noise, UniformInRangeAndSeeded) {
    const auto a = uniform_noise(8, 42), b = uniform_noise(8, 42), c = uniform_noise(8, 43);
    EXPECT_EQ(a.shape(), (Shape{8, kNoiseDim}));
    double mean = 0;
    for (float x : a.values()) {
        EXPECT_GE(x, -1.f);
        EXPECT_LE(x, 1.f);
        mean += x;
    }
    EXPECT_NEAR(mean / a.size(), 0.0, 0.1);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
    EXPECT_NE(noise_seed(1, 2, 3, 0), noise_seed(1, 2, 3, 1));
    EXPECT_NE(noise_seed(1, 2, 3, 0), noise_seed(1, 3, 3, 0));
}

// ---- steps -------------------------------------------------------------

TEST(Steps, LossBookkeepingAtNeutralDiscriminators) {
    const Index M = 4, H = 2;
    Model m = Model::create(Scale{4}, 5);
    m.zero_output_layer(NK::StructureDiscriminator);
    m.zero_output_layer(NK::StyleDiscriminator);
    for (NK k : {NK::StructureDiscriminator, NK::StyleDiscriminator}) m.net(k).adam.lr = 0;
    const auto s = structure_step(m, normals_batch(H, 18, 2), uniform_noise(H, 1));
    EXPECT_NEAR(s.d_loss, M * std::log(2.0), 1e-5);
    EXPECT_NEAR(s.g_loss, H * std::log(2.0), 1e-5);

    m.codebook = build_codebook(1, Scale{4}, 2, 1);
    const auto normals = normals_batch(M, 32, 3);
    StyleInputs in;
    in.real_normals = batch_slice(normals, 0, H);
    in.real_images = normals_batch(H, 32, 4);
    in.cond_normals = batch_slice(normals, H, M);
    std::vector<float> cn(in.cond_normals.values().begin(), in.cond_normals.values().end());
    in.cond_labels.clear();
    for (Index b = 0; b < H; ++b) {
        std::vector<float> one(cn.begin() + b * 3 * 1024, cn.begin() + (b + 1) * 3 * 1024);
        const auto l = quantize_normals(one, 1024, *m.codebook);
        in.cond_labels.insert(in.cond_labels.end(), l.begin(), l.end());
    }
    in.z = uniform_noise(H, 2);
    StyleOptions opt;
    opt.fcn_weight = 0;
    const auto y = style_step(m, in, opt);
    EXPECT_NEAR(y.d_loss, M * std::log(2.0), 1e-5);
    EXPECT_NEAR(y.g_adv, H * std::log(2.0), 1e-5);
    EXPECT_EQ(y.g_loss, y.g_adv);
    opt.fcn_weight = 1;
    const auto w = style_step(m, in, opt);
    EXPECT_GT(w.g_fcn, 0);
    EXPECT_NEAR(w.g_loss, w.g_adv + w.g_fcn, 1e-4);
}

TEST(Steps, EachOptimizerStepsOnceAndOnlyItsNetwork) {
    Model base = Model::create(Scale{4}, 6);
    const auto real = normals_batch(2, 18, 5);
    const auto z = uniform_noise(2, 3);

    Model a = base.clone();
    a.net(NK::StructureGenerator).adam.lr = 0;
    structure_step(a, real, z);
    EXPECT_TRUE(same_params(a.net(NK::StructureGenerator).params, base.net(NK::StructureGenerator).params));
    EXPECT_FALSE(same_params(a.net(NK::StructureDiscriminator).params, base.net(NK::StructureDiscriminator).params));
    EXPECT_EQ(a.net(NK::StructureGenerator).adam.step, 1u);
    EXPECT_EQ(a.net(NK::StructureDiscriminator).adam.step, 1u);

    Model b = base.clone();
    b.net(NK::StructureDiscriminator).adam.lr = 0;
    structure_step(b, real, z);
    EXPECT_TRUE(same_params(b.net(NK::StructureDiscriminator).params, base.net(NK::StructureDiscriminator).params));
    EXPECT_FALSE(same_params(b.net(NK::StructureGenerator).params, base.net(NK::StructureGenerator).params));
    for (NK k : {NK::StyleGenerator, NK::StyleDiscriminator, NK::Fcn})
        EXPECT_TRUE(same_params(b.net(k).params, base.net(k).params));
}

TEST(Steps, JointWithZeroLambdaMatchesStructureUpdate) {
    Model base = Model::create(Scale{4}, 8);
    const auto real = normals_batch(2, 18, 6);
    const auto z = uniform_noise(2, 4);
    Model a = base.clone();
    structure_step(a, real, z);

    Model b = base.clone();
    JointInputs in;
    in.real_structure = real;
    in.real_normals = normals_batch(2, 32, 6);
    in.real_images = normals_batch(2, 32, 7);
    in.z_hat = z;
    in.z_tilde = uniform_noise(2, 5);
    const auto j = joint_step(b, in, 0.0);
    EXPECT_EQ(j.structure_g, j.structure_g_adv);
    EXPECT_GT(j.style_chain, 0);
    for (NK k : {NK::StructureGenerator, NK::StructureDiscriminator}) {
        EXPECT_TRUE(same_params(a.net(k).params, b.net(k).params)) << network_kind_name(k);
        EXPECT_EQ(a.net(k).adam.m, b.net(k).adam.m);
    }
    // Style networks did train.
    EXPECT_FALSE(same_params(b.net(NK::StyleGenerator).params, base.net(NK::StyleGenerator).params));
}

TEST(Steps, JointStyleGeneratorStatisticsMoveOncePerIteration) {
    Model m = Model::create(Scale{4}, 8);
    JointInputs in;
    in.real_structure = normals_batch(2, 18, 1);
    in.real_normals = normals_batch(2, 32, 1);
    in.real_images = normals_batch(2, 32, 2);
    in.z_hat = uniform_noise(2, 1);
    in.z_tilde = uniform_noise(2, 2);
    Model ref = m.clone();
    joint_step(m, in, 0.1);
    // Reference: one train-mode style forward on the same conditioning.
    const auto gen = ref.structure_generate(in.z_hat, Mode::Train);
    ref.style_generate(ref.upsample_structure(gen.detach()), in.z_tilde, Mode::Train);
    for (const auto& [name, s] : ref.net(NK::StyleGenerator).params.bn_stats)
        EXPECT_EQ(s.mean, m.net(NK::StyleGenerator).params.bn_stats.at(name).mean) << name;
}

TEST(Steps, StylePathGradientIsLinearInLambda) {
    Model m = Model::create(Scale{4}, 10);
    for (NK k : {NK::StructureDiscriminator, NK::StyleGenerator, NK::StyleDiscriminator})
        m.net(k).params.set_trainable(false);
    const auto zh = uniform_noise(2, 11), zt = uniform_noise(2, 12);
    auto grad_at = [&](double lambda) {
        auto& G = m.net(NK::StructureGenerator).params;
        G.set_trainable(true);
        G.zero_grad();
        const auto gen = m.structure_generate(zh, Mode::Train);
        joint_structure_objective(m, gen, zt, lambda).total.backward();
        std::vector<double> g;
        for (const auto& [n, t] : G.tensors) g.insert(g.end(), t.grad().begin(), t.grad().end());
        return g;
    };
    const auto g0 = grad_at(0.0), g1 = grad_at(0.1), g2 = grad_at(0.2);
    double num = 0, den = 0, mag = 0;
    for (std::size_t i = 0; i < g0.size(); ++i) {
        const double s1 = g1[i] - g0[i], s2 = g2[i] - g0[i];
        num += (s2 - 2 * s1) * (s2 - 2 * s1);
        den += s2 * s2;
        mag += s1 * s1;
    }
    ASSERT_GT(mag, 0);
    EXPECT_LE(std::sqrt(num / den), 1e-2);
}

// ---- metrics -----------------------------------------------------------

TEST(Metrics, ArgmaxLabelsAreOneBasedWithLowestTie) {
    std::vector<float> v(2 * 40 * 1, 0.f);
    v[7] = 3.f;  // sample 0, class 8
    const Tensor<float> logits({2, 40, 1, 1}, v);
    EXPECT_EQ(argmax_labels(logits), (std::vector<std::int32_t>{8, 1}));
}

TEST(Metrics, AngularErrorAndNormDeviation) {
    NormalCodebook cb;
    cb.centroids = {{0, 0, 1}, {0, 1, 0}};
    const Tensor<float> n({1, 3, 1, 2}, {0.f, 0.f, 0.f, 0.f, 1.f, 1.f});
    EXPECT_NEAR(label_angular_error({1, 2}, cb, n), 45.0, 1e-9);
    EXPECT_THROW(label_angular_error({1, 3}, cb, n), DataError);
    const Tensor<float> half({1, 3, 1, 1}, {0.f, 0.f, 0.5f});
    EXPECT_NEAR(normal_norm_deviation(half), 0.5, 1e-7);
    const Tensor<float> real({2, 1}, {0.9f, 0.4f}), fake({2, 1}, {0.1f, 0.6f});
    EXPECT_DOUBLE_EQ(discriminator_accuracy(real, fake), 0.5);
}

// ---- trainer -----------------------------------------------------------

TEST(Trainer, PhaseNamesRoundTrip) {
    for (Phase p : {Phase::Fcn, Phase::Structure, Phase::Style, Phase::Joint})
        EXPECT_EQ(parse_phase(phase_name(p)), p);
    EXPECT_THROW(parse_phase("pretrain"), ConfigError);
}

TEST(Trainer, IterationCountsFromEpochs) {
    auto c = small_config(fresh_dir("epochs"));
    c.iters_structure = 0;
    c.epochs_structure = 3;
    c.iters_fcn = 0;
    c.epochs_fcn = 2;
    Trainer t(c);
    EXPECT_EQ(t.total_iterations(Phase::Structure), 3u * (16 / 2));
    EXPECT_EQ(t.total_iterations(Phase::Fcn), 2u * (16 / 4));
    EXPECT_EQ(t.total_iterations(Phase::Style), 4u);
}

TEST(Trainer, CsvHasHeaderAndOneRowPerLoss) {
    const auto dir = fresh_dir("csv");
    Trainer t(small_config(dir));
    const auto r = t.run(Phase::Structure);
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(r.rows.size(), 8u);
    std::ifstream in(t.csv_path(Phase::Structure));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iteration,phase,loss_name,value");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("0,structure,d_loss,", 0), 0u) << line;
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 8);
}

TEST(Trainer, MissingPrerequisiteNamesThePhase) {
    const auto dir = fresh_dir("prereq");
    Trainer t(small_config(dir));
    try {
        t.run(Phase::Style);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("train fcn"), std::string::npos) << e.what();
    }
    try {
        t.run(Phase::Joint);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("train structure"), std::string::npos) << e.what();
    }
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
    const auto da = fresh_dir("resume_a"), db = fresh_dir("resume_b");
    auto ca = small_config(da), cb = small_config(db);
    ca.iters_structure = cb.iters_structure = 10;
    ca.checkpoint_every = cb.checkpoint_every = 3;
    Trainer(ca).run(Phase::Structure);
    {
        Trainer first(cb);
        first.set_iteration_budget(5);
        const auto r = first.run(Phase::Structure);
        EXPECT_FALSE(r.complete);
        EXPECT_EQ(r.end_iteration, 5u);
    }
    Trainer second(cb);
    const auto r = second.run(Phase::Structure);
    EXPECT_EQ(r.start_iteration, 5u);
    EXPECT_TRUE(r.complete);
    EXPECT_TRUE(slurp(da + "/checkpoints/structure.ckpt") == slurp(db + "/checkpoints/structure.ckpt"));
    EXPECT_TRUE(slurp(da + "/losses_structure.csv") == slurp(db + "/losses_structure.csv"));
}

TEST(Trainer, ResumeRejectsADifferentConfiguration) {
    const auto dir = fresh_dir("resume_cfg");
    auto c = small_config(dir);
    {
        Trainer t(c);
        t.set_iteration_budget(1);
        t.run(Phase::Structure);
    }
    c.lambda = 0.3;
    Trainer t(c);
    EXPECT_THROW(t.run(Phase::Structure), ConfigError);
}

TEST(Trainer, InterruptWritesCheckpointAndResumes) {
    const auto dir = fresh_dir("interrupt");
    Trainer t(small_config(dir));
    request_stop();
    EXPECT_THROW(t.run(Phase::Structure), InterruptedError);
    clear_stop();
    const auto a = Archive::load(t.checkpoint_path(Phase::Structure));
    EXPECT_EQ(a.u64_scalar("meta/complete"), 0u);
    EXPECT_EQ(a.u64_scalar("meta/iteration"), 0u);
    EXPECT_TRUE(t.run(Phase::Structure).complete);
}

TEST(Trainer, FullPipelineAtTinyScale) {
    const auto dir = fresh_dir("pipeline");
    Trainer t(small_config(dir));
    const auto f = t.run(Phase::Fcn);
    EXPECT_TRUE(f.complete);
    EXPECT_TRUE(fs::exists(dir + "/codebook.txt"));
    t.run(Phase::Structure);
    const auto s = t.run(Phase::Style);
    ASSERT_EQ(s.rows.size(), 2u * 4 + 2u * 5);
    EXPECT_EQ(s.rows.front().phase, "style-frozen-fcn");
    EXPECT_EQ(s.rows.back().phase, "style-finetune-fcn");
    const auto j = t.run(Phase::Joint);
    EXPECT_TRUE(j.complete);
    EXPECT_EQ(j.rows.size(), 3u * 6);
    const auto a = Archive::load(t.checkpoint_path(Phase::Joint));
    for (NK k : kAllNetworks) EXPECT_TRUE(t.model().stored(a, k)) << network_kind_name(k);
    EXPECT_TRUE(a.contains("codebook"));
    // A finished phase is not rerun.
    EXPECT_TRUE(t.run(Phase::Joint).rows.empty());
}

TEST(Trainer, FcnEarlyStopsAtTarget) {
    const auto dir = fresh_dir("early");
    auto c = small_config(dir);
    c.iters_fcn = 10;
    c.fcn_eval_every = 2;
    c.fcn_target_accuracy = 1e-6;
    Trainer t(c);
    const auto r = t.run(Phase::Fcn);
    EXPECT_TRUE(r.early_stopped);
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(r.end_iteration, 2u);
    EXPECT_GT(r.test_accuracy, 0);
}

TEST(Trainer, DivergenceGuardTriggersAtLargeLambdaOnly) {
    const auto dir = fresh_dir("diverge");
    auto c = small_config(dir);
    c.iters_joint = 12;
    c.divergence_patience = 5;
    {
        Trainer t(c);
        t.run(Phase::Fcn);
        t.run(Phase::Structure);
        t.run(Phase::Style);
        const auto r = t.run(Phase::Joint);
        EXPECT_TRUE(r.complete);
    }
    fs::remove(dir + "/checkpoints/joint.ckpt");
    c.lambda = 10;
    Trainer t(c);
    try {
        t.run(Phase::Joint);
        FAIL() << "guard did not trigger";
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("5 consecutive"), std::string::npos) << e.what();
    }
    EXPECT_TRUE(fs::exists(dir + "/divergence_joint.txt"));
}
