#include "stylestruct/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "stylestruct/error.hpp"
#include "stylestruct/losses.hpp"

namespace stylestruct {

namespace fs = std::filesystem;

using NK = NetworkKind;

namespace {

std::atomic<bool> g_stop{false};

std::vector<std::int32_t> slice_labels(const std::vector<std::int32_t>& l, Index per, Index begin, Index end) {
    return {l.begin() + begin * per, l.begin() + end * per};
}

}  // namespace

void request_stop() { g_stop = true; }
void clear_stop() { g_stop = false; }
bool stop_requested() { return g_stop; }

// ---- steps -------------------------------------------------------------

StructureStep structure_step(Model& m, const Tensor<float>& real_normals, const Tensor<float>& z) {
    Net& G = m.net(NK::StructureGenerator);
    Net& D = m.net(NK::StructureDiscriminator);
    G.params.set_trainable(true);
    D.params.set_trainable(true);
    const Tensor<float> fake = m.structure_generate(z, Mode::Train);

    D.params.zero_grad();
    const auto d = gan_d_loss(m.structure_score(real_normals), m.structure_score(fake.detach()));
    d.backward();
    adam_step(D.params, D.adam);

    D.params.set_trainable(false);
    G.params.zero_grad();
    const auto g = gan_g_loss(m.structure_score(fake));
    g.backward();
    adam_step(G.params, G.adam);
    D.params.set_trainable(true);
    return {d.item(), g.item()};
}

StyleStep style_step(Model& m, const StyleInputs& in, const StyleOptions& opt) {
    Net& G = m.net(NK::StyleGenerator);
    Net& D = m.net(NK::StyleDiscriminator);
    Net& F = m.net(NK::Fcn);
    G.params.set_trainable(true);
    D.params.set_trainable(true);
    F.params.set_trainable(false);
    StyleStep out;
    const Tensor<float> fake = m.style_generate(in.cond_normals, in.z, Mode::Train);

    D.params.zero_grad();
    const auto d = cond_d_loss(m.style_score(in.real_normals, in.real_images),
                               m.style_score(in.cond_normals, fake.detach()));
    d.backward();
    adam_step(D.params, D.adam);
    out.d_loss = d.item();

    D.params.set_trainable(false);
    const auto adv = cond_g_loss(m.style_score(in.cond_normals, fake));
    Tensor<float> total = adv;
    if (opt.fcn_weight > 0) {
        auto term = fcn_loss(m.fcn_logits(fake, opt.finetune_fcn ? Mode::Train : Mode::Eval), in.cond_labels);
        out.g_fcn = term.item();
        if (opt.fcn_weight != 1.0) term = scale(term, static_cast<float>(opt.fcn_weight));
        total = style_g_multitask_loss(adv, term);
    }
    G.params.zero_grad();
    total.backward();
    adam_step(G.params, G.adam);
    D.params.set_trainable(true);
    out.g_adv = adv.item();
    out.g_loss = total.item();

    if (opt.finetune_fcn) {
        F.params.set_trainable(true);
        F.params.zero_grad();
        const auto lf = add(fcn_loss(m.fcn_logits(in.real_images, Mode::Train), in.real_labels),
                            fcn_loss(m.fcn_logits(fake.detach(), Mode::Train), in.cond_labels));
        lf.backward();
        adam_step(F.params, F.adam);
        F.params.set_trainable(false);
        out.fcn_loss = lf.item();
    }
    return out;
}

double fcn_step(Model& m, const Tensor<float>& images, const std::vector<std::int32_t>& labels) {
    Net& F = m.net(NK::Fcn);
    F.params.set_trainable(true);
    F.params.zero_grad();
    const auto l = fcn_loss(m.fcn_logits(images, Mode::Train), labels);
    l.backward();
    adam_step(F.params, F.adam);
    return l.item();
}

JointObjective joint_structure_objective(Model& m, const Tensor<float>& generated, const Tensor<float>& z_tilde,
                                         double lambda) {
    JointObjective o;
    const auto up = m.upsample_structure(generated);
    const auto image = m.style_generate(up, z_tilde, Mode::Train);
    o.style_term = cond_g_loss(m.style_score(up, image));
    o.structure_term = gan_g_loss(m.structure_score(generated));
    o.total = joint_structure_g_loss(o.structure_term, o.style_term, lambda);
    return o;
}

JointStep joint_step(Model& m, const JointInputs& in, double lambda) {
    Net& SG = m.net(NK::StructureGenerator);
    Net& SD = m.net(NK::StructureDiscriminator);
    Net& YG = m.net(NK::StyleGenerator);
    Net& YD = m.net(NK::StyleDiscriminator);
    for (Net* n : {&SG, &SD, &YG, &YD}) n->params.set_trainable(true);
    m.net(NK::Fcn).params.set_trainable(false);
    JointStep out;

    const Tensor<float> generated = m.structure_generate(in.z_hat, Mode::Train);
    const Tensor<float> detached = generated.detach();
    const Tensor<float> cond = m.upsample_structure(detached);

    SD.params.zero_grad();
    const auto sd = gan_d_loss(m.structure_score(in.real_structure), m.structure_score(detached));
    sd.backward();
    adam_step(SD.params, SD.adam);
    out.structure_d = sd.item();

    const Tensor<float> image = m.style_generate(cond, in.z_tilde, Mode::Train);
    YD.params.zero_grad();
    const auto yd = cond_d_loss(m.style_score(in.real_normals, in.real_images), m.style_score(cond, image.detach()));
    yd.backward();
    adam_step(YD.params, YD.adam);
    out.style_d = yd.item();

    YD.params.set_trainable(false);
    YG.params.zero_grad();
    const auto yg = cond_g_loss(m.style_score(cond, image));
    yg.backward();
    adam_step(YG.params, YG.adam);
    out.style_g = yg.item();

    // The style generator only relays gradient here; its running statistics
    // already moved once this iteration.
    SD.params.set_trainable(false);
    YG.params.set_trainable(false);
    const auto saved = YG.params.bn_stats;
    const auto obj = joint_structure_objective(m, generated, in.z_tilde, lambda);
    SG.params.zero_grad();
    obj.total.backward();
    adam_step(SG.params, SG.adam);
    YG.params.bn_stats = saved;
    out.structure_g = obj.total.item();
    out.structure_g_adv = obj.structure_term.item();
    out.style_chain = obj.style_term.item();

    for (Net* n : {&SD, &YG, &YD}) n->params.set_trainable(true);
    return out;
}

// ---- metrics -----------------------------------------------------------

std::vector<std::int32_t> argmax_labels(const Tensor<float>& logits) {
    const Index n = logits.dim(0), k = logits.dim(1), hw = logits.dim(2) * logits.dim(3);
    const auto v = logits.values();
    std::vector<std::int32_t> out(static_cast<std::size_t>(n * hw));
    for (Index b = 0; b < n; ++b)
        for (Index p = 0; p < hw; ++p) {
            Index best = 0;
            float bv = v[static_cast<std::size_t>(b * k * hw + p)];
            for (Index c = 1; c < k; ++c) {
                const float x = v[static_cast<std::size_t>((b * k + c) * hw + p)];
                if (x > bv) {
                    bv = x;
                    best = c;
                }
            }
            out[static_cast<std::size_t>(b * hw + p)] = static_cast<std::int32_t>(best + 1);
        }
    return out;
}

double fcn_pixel_accuracy(Model& m, const SceneDataset& ds, Index batch) {
    if (ds.labels.empty()) throw ConfigError("dataset has no labels");
    std::uint64_t hit = 0, total = 0;
    for (Index b = 0; b < ds.count; b += batch) {
        std::vector<Index> idx;
        for (Index i = b; i < std::min(ds.count, b + batch); ++i) idx.push_back(i);
        const Batch bt = make_batch(ds, idx);
        const auto pred = argmax_labels(m.fcn_logits(bt.images, Mode::Eval));
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == bt.labels[i];
        total += pred.size();
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

double label_angular_error(const std::vector<std::int32_t>& labels, const NormalCodebook& cb,
                           const Tensor<float>& normals) {
    const Index n = normals.dim(0), hw = normals.dim(2) * normals.dim(3);
    if (static_cast<Index>(labels.size()) != n * hw) throw ConfigError("label count does not match the normal map");
    const auto v = normals.values();
    double acc = 0;
    for (Index b = 0; b < n; ++b)
        for (Index p = 0; p < hw; ++p) {
            const auto l = labels[static_cast<std::size_t>(b * hw + p)];
            if (l < 1 || l > static_cast<std::int32_t>(cb.size()))
                throw DataError("label " + std::to_string(l) + " outside [1, " + std::to_string(cb.size()) + "]");
            const Vec3 ref{v[static_cast<std::size_t>((b * 3 + 0) * hw + p)],
                           v[static_cast<std::size_t>((b * 3 + 1) * hw + p)],
                           v[static_cast<std::size_t>((b * 3 + 2) * hw + p)]};
            acc += angle_degrees(cb.centroids[static_cast<std::size_t>(l - 1)], ref);
        }
    return acc / static_cast<double>(n * hw);
}

double normal_norm_deviation(const Tensor<float>& normals) {
    const Index n = normals.dim(0), hw = normals.dim(2) * normals.dim(3);
    const auto v = normals.values();
    double acc = 0;
    for (Index b = 0; b < n; ++b)
        for (Index p = 0; p < hw; ++p) {
            double s = 0;
            for (Index c = 0; c < 3; ++c) {
                const double x = v[static_cast<std::size_t>((b * 3 + c) * hw + p)];
                s += x * x;
            }
            acc += std::abs(std::sqrt(s) - 1.0);
        }
    return acc / static_cast<double>(n * hw);
}

double discriminator_accuracy(const Tensor<float>& real_scores, const Tensor<float>& fake_scores) {
    std::size_t ok = 0;
    for (float s : real_scores.values()) ok += s > 0.5f;
    for (float s : fake_scores.values()) ok += s < 0.5f;
    return static_cast<double>(ok) / static_cast<double>(real_scores.size() + fake_scores.size());
}

// ---- phases ------------------------------------------------------------

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Fcn: return "fcn";
        case Phase::Structure: return "structure";
        case Phase::Style: return "style";
        case Phase::Joint: return "joint";
    }
    return "?";
}

Phase parse_phase(const std::string& text) {
    for (Phase p : {Phase::Fcn, Phase::Structure, Phase::Style, Phase::Joint})
        if (text == phase_name(p)) return p;
    throw ConfigError("unknown phase '" + text + "' (expected fcn, structure, style or joint)");
}

namespace {

std::uint64_t phase_code(Phase p) { return static_cast<std::uint64_t>(p) + 1; }

std::vector<NK> phase_networks(Phase p) {
    switch (p) {
        case Phase::Fcn: return {NK::Fcn};
        case Phase::Structure: return {NK::StructureGenerator, NK::StructureDiscriminator};
        case Phase::Style: return {NK::StyleGenerator, NK::StyleDiscriminator, NK::Fcn};
        case Phase::Joint:
            return {NK::StructureGenerator, NK::StructureDiscriminator, NK::StyleGenerator, NK::StyleDiscriminator,
                    NK::Fcn};
    }
    return {};
}

std::uint64_t or_epochs(std::uint64_t iters, std::uint64_t epochs, Index per_epoch) {
    return iters ? iters : epochs * static_cast<std::uint64_t>(per_epoch);
}

std::uint64_t style_frozen_iterations(const TrainConfig& c) {
    return or_epochs(c.iters_style, c.epochs_style, c.data_count / c.batch_size);
}

}  // namespace

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    model_ = Model::create(cfg_.scale, cfg_.seed);
}

std::uint64_t Trainer::total_iterations(Phase p) {
    const Index full = cfg_.data_count / cfg_.batch_size, half = cfg_.data_count / (cfg_.batch_size / 2);
    switch (p) {
        case Phase::Fcn: return or_epochs(cfg_.iters_fcn, cfg_.epochs_fcn, full);
        case Phase::Structure: return or_epochs(cfg_.iters_structure, cfg_.epochs_structure, half);
        case Phase::Style:
            return style_frozen_iterations(cfg_) +
                   or_epochs(cfg_.iters_style_finetune, cfg_.epochs_style_finetune, full);
        case Phase::Joint: return or_epochs(cfg_.iters_joint, cfg_.epochs_joint, half);
    }
    return 0;
}

std::string Trainer::checkpoint_path(Phase p) const {
    return (fs::path(cfg_.out_dir) / "checkpoints" / (std::string(phase_name(p)) + ".ckpt")).string();
}

std::string Trainer::csv_path(Phase p) const {
    return (fs::path(cfg_.out_dir) / ("losses_" + std::string(phase_name(p)) + ".csv")).string();
}

const SceneDataset& Trainer::train_data() {
    if (!train_) {
        DataConfig dc;
        dc.count = cfg_.data_count;
        dc.scale = cfg_.scale;
        dc.seed = cfg_.seed;
        dc.split = Split::Train;
        train_ = std::make_unique<SceneDataset>(SceneDataset::generate(dc));
    }
    ensure_labels(*train_);
    return *train_;
}

const SceneDataset& Trainer::test_data() {
    if (!test_) {
        DataConfig dc;
        dc.count = cfg_.test_count;
        dc.scale = cfg_.scale;
        dc.seed = cfg_.seed;
        dc.split = Split::Test;
        test_ = std::make_unique<SceneDataset>(SceneDataset::generate(dc));
    }
    ensure_labels(*test_);
    return *test_;
}

void Trainer::ensure_labels(SceneDataset& ds) {
    if (model_.codebook && ds.labels.empty()) ds.assign_labels(*model_.codebook);
}

void Trainer::load_prerequisite(Phase needed, const std::vector<NetworkKind>& nets) {
    const std::string path = checkpoint_path(needed);
    if (!fs::exists(path))
        throw DataError("missing prerequisite checkpoint '" + path + "'; run `train " + phase_name(needed) +
                        "` first");
    const Archive a = Archive::load(path);
    if (a.u64_scalar("meta/complete") == 0)
        throw DataError("prerequisite checkpoint '" + path + "' is incomplete; finish `train " +
                        phase_name(needed) + "` first");
    if (static_cast<int>(a.u64_scalar("meta/scale_divisor")) != cfg_.scale.divisor)
        throw DataError("prerequisite checkpoint '" + path + "' was trained at a different scale");
    for (NK k : nets) model_.restore(a, k);
    model_.restore_codebook(a);
}

void Trainer::prepare(Phase p) {
    model_ = Model::create(cfg_.scale, cfg_.seed);
    divergence_run_ = 0;
    switch (p) {
        case Phase::Fcn:
            model_.codebook = build_codebook(cfg_.seed, cfg_.scale, cfg_.codebook_scenes, cfg_.seed);
            fs::create_directories(cfg_.out_dir);
            save_codebook(*model_.codebook, (fs::path(cfg_.out_dir) / "codebook.txt").string());
            break;
        case Phase::Structure: break;
        case Phase::Style: load_prerequisite(Phase::Fcn, {NK::Fcn}); break;
        case Phase::Joint:
            load_prerequisite(Phase::Structure, {NK::StructureGenerator, NK::StructureDiscriminator});
            load_prerequisite(Phase::Style, {NK::StyleGenerator, NK::StyleDiscriminator, NK::Fcn});
            break;
    }
    for (NK k : phase_networks(p)) model_.net(k).adam.reset();
    if (train_) train_->labels.clear();
    if (test_) test_->labels.clear();
}

void Trainer::save_checkpoint(Phase p, std::uint64_t iteration, std::uint64_t total, bool complete) {
    Archive a;
    a.put_string("meta/phase", phase_name(p));
    a.put_u64("meta/iteration", {iteration});
    a.put_u64("meta/total", {total});
    a.put_u64("meta/complete", {complete ? 1ULL : 0ULL});
    a.put_u64("meta/config_hash", {cfg_.hash()});
    a.put_u64("meta/seed", {cfg_.seed});
    a.put_u64("meta/scale_divisor", {static_cast<std::uint64_t>(cfg_.scale.divisor)});
    a.put_u64("meta/divergence_run", {divergence_run_});
    a.put_string("meta/config", cfg_.serialize());
    model_.store_codebook(a);
    for (NK k : phase_networks(p)) model_.store(a, k);
    a.save(checkpoint_path(p));
    if (csv_.is_open()) csv_.flush();
}

std::uint64_t Trainer::resume_point(Phase p, std::uint64_t total) {
    const std::string path = checkpoint_path(p);
    if (!fs::exists(path)) return 0;
    const Archive a = Archive::load(path);
    if (a.string("meta/phase") != phase_name(p))
        throw DataError("'" + path + "' holds phase '" + a.string("meta/phase") + "'");
    if (a.u64_scalar("meta/config_hash") != cfg_.hash())
        throw ConfigError("'" + path + "' was written under a different configuration; use the same config or "
                          "another out directory");
    for (NK k : phase_networks(p)) model_.restore(a, k);
    model_.restore_codebook(a);
    divergence_run_ = a.u64_scalar("meta/divergence_run");
    if (a.u64_scalar("meta/complete")) return total;
    return a.u64_scalar("meta/iteration");
}

void Trainer::open_csv(Phase p, std::uint64_t start) {
    if (csv_.is_open()) csv_.close();
    const std::string path = csv_path(p);
    std::vector<std::string> keep;
    if (start > 0) {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            std::uint64_t it = 0;
            try {
                it = std::stoull(line.substr(0, comma));
            } catch (const std::exception&) {
                continue;
            }
            if (it < start) keep.push_back(line);
        }
    }
    csv_.open(path, std::ios::trunc);
    if (!csv_) throw DataError("cannot write '" + path + "'");
    csv_ << "iteration,phase,loss_name,value\n";
    for (const auto& l : keep) csv_ << l << "\n";
}

void Trainer::log(PhaseReport& r, std::uint64_t it, const std::string& phase, const std::string& name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    csv_ << it << "," << phase << "," << name << "," << buf << "\n";
    r.rows.push_back({it, phase, name, v});
}

void Trainer::guard(Phase p, std::uint64_t it, double loss) {
    if (loss > cfg_.divergence_ceiling || !std::isfinite(loss)) ++divergence_run_;
    else divergence_run_ = 0;
    if (divergence_run_ < cfg_.divergence_patience) return;
    csv_.flush();
    const std::string path = (fs::path(cfg_.out_dir) / ("divergence_" + std::string(phase_name(p)) + ".txt")).string();
    std::ostringstream os;
    os << "phase " << phase_name(p) << ": generator loss above " << cfg_.divergence_ceiling << " for "
       << divergence_run_ << " consecutive iterations (iteration " << it << ", last value " << loss << ")";
    std::ofstream(path) << os.str() << "\n";
    throw DivergenceError(os.str() + "; report written to '" + path + "'");
}

PhaseReport Trainer::run(Phase p) {
    fs::create_directories(fs::path(cfg_.out_dir) / "checkpoints");
    prepare(p);
    const std::uint64_t total = total_iterations(p);
    const std::uint64_t start = resume_point(p, total);
    PhaseReport r;
    r.phase = p;
    r.start_iteration = start;
    r.total_iterations = total;
    r.checkpoint = checkpoint_path(p);
    if (start >= total) {
        r.end_iteration = total;
        r.complete = true;
        return r;
    }

    switch (p) {
        case Phase::Fcn: model_.net(NK::Fcn).adam.lr = cfg_.lr_fcn; break;
        case Phase::Structure:
            model_.net(NK::StructureGenerator).adam.lr = cfg_.lr_structure;
            model_.net(NK::StructureDiscriminator).adam.lr = cfg_.lr_structure;
            break;
        case Phase::Style:
            model_.net(NK::StyleGenerator).adam.lr = cfg_.lr_style;
            model_.net(NK::StyleDiscriminator).adam.lr = cfg_.lr_style;
            model_.net(NK::Fcn).adam.lr = cfg_.lr_fcn;
            break;
        case Phase::Joint:
            model_.net(NK::StructureGenerator).adam.lr = cfg_.lr_joint_structure;
            model_.net(NK::StructureDiscriminator).adam.lr = cfg_.lr_joint_structure;
            model_.net(NK::StyleGenerator).adam.lr = cfg_.lr_joint_style;
            model_.net(NK::StyleDiscriminator).adam.lr = cfg_.lr_joint_style;
            break;
    }

    const Index M = cfg_.batch_size, H = M / 2;
    const bool full_batch = p == Phase::Fcn || p == Phase::Style;
    const SceneDataset& data = train_data();
    if (p == Phase::Fcn) test_data();
    BatchStream stream(data, full_batch ? M : H, splitmix64(cfg_.seed ^ (0xba7c4ULL + phase_code(p))));
    open_csv(p, start);

    const std::uint64_t frozen = style_frozen_iterations(cfg_);
    const Index S = cfg_.scale.image_size(), px = S * S;
    std::uint64_t it = start, executed = 0;
    for (; it < total; ++it) {
        if (budget_ && executed == budget_) break;
        if (stop_requested()) {
            save_checkpoint(p, it, total, false);
            throw InterruptedError("interrupted at iteration " + std::to_string(it) + " of phase " +
                                   phase_name(p) + "; checkpoint written to '" + checkpoint_path(p) + "'");
        }
        const Batch b = stream.batch(it);
        const auto z0 = [&](Index n) { return uniform_noise(n, noise_seed(cfg_.seed, phase_code(p), it, 0)); };
        const auto z1 = [&](Index n) { return uniform_noise(n, noise_seed(cfg_.seed, phase_code(p), it, 1)); };
        switch (p) {
            case Phase::Fcn: {
                log(r, it, "fcn-pretrain", "fcn_loss", fcn_step(model_, b.images, b.labels));
                break;
            }
            case Phase::Structure: {
                const auto s = structure_step(model_, b.structure_normals, z0(H));
                log(r, it, "structure", "d_loss", s.d_loss);
                log(r, it, "structure", "g_loss", s.g_loss);
                guard(p, it, s.g_loss);
                break;
            }
            case Phase::Style: {
                StyleInputs in;
                in.real_normals = batch_slice(b.normals, 0, H);
                in.real_images = batch_slice(b.images, 0, H);
                in.real_labels = slice_labels(b.labels, px, 0, H);
                in.cond_normals = batch_slice(b.normals, H, M);
                in.cond_labels = slice_labels(b.labels, px, H, M);
                in.z = z1(H);
                StyleOptions opt;
                opt.fcn_weight = cfg_.fcn_weight;
                opt.finetune_fcn = it >= frozen;
                const std::string stage = opt.finetune_fcn ? "style-finetune-fcn" : "style-frozen-fcn";
                const auto s = style_step(model_, in, opt);
                log(r, it, stage, "d_loss", s.d_loss);
                log(r, it, stage, "g_adv", s.g_adv);
                log(r, it, stage, "g_fcn", s.g_fcn);
                log(r, it, stage, "g_loss", s.g_loss);
                if (opt.finetune_fcn) log(r, it, stage, "fcn_loss", s.fcn_loss);
                guard(p, it, s.g_adv);
                break;
            }
            case Phase::Joint: {
                JointInputs in;
                in.real_structure = b.structure_normals;
                in.real_normals = b.normals;
                in.real_images = b.images;
                in.z_hat = z0(H);
                in.z_tilde = z1(H);
                const auto s = joint_step(model_, in, cfg_.lambda);
                log(r, it, "joint", "structure_d_loss", s.structure_d);
                log(r, it, "joint", "style_d_loss", s.style_d);
                log(r, it, "joint", "style_g_loss", s.style_g);
                log(r, it, "joint", "structure_g_loss", s.structure_g);
                log(r, it, "joint", "structure_g_adv", s.structure_g_adv);
                log(r, it, "joint", "style_chain", s.style_chain);
                guard(p, it, s.structure_g);
                break;
            }
        }
        ++executed;
        if (p == Phase::Fcn && cfg_.fcn_eval_every && ((it + 1) % cfg_.fcn_eval_every == 0 || it + 1 == total)) {
            r.test_accuracy = fcn_pixel_accuracy(model_, test_data(), M);
            log(r, it, "fcn-pretrain", "test_accuracy", r.test_accuracy);
            if (cfg_.fcn_target_accuracy > 0 && r.test_accuracy >= cfg_.fcn_target_accuracy) {
                r.early_stopped = true;
                ++it;
                break;
            }
        }
        if (cfg_.checkpoint_every && (it + 1) % cfg_.checkpoint_every == 0 && it + 1 < total)
            save_checkpoint(p, it + 1, total, false);
    }
    r.end_iteration = it;
    r.complete = it == total || r.early_stopped;
    save_checkpoint(p, it, total, r.complete);
    csv_.close();
    return r;
}

}  // namespace stylestruct
