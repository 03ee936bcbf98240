#include <csignal>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylestruct/stylestruct.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitCheckFailed = 4;
constexpr int kExitInterrupted = 130;

int exit_code(sts_status s) {
    switch (s) {
        case STS_OK: return 0;
        case STS_ERR_USAGE: return kExitUsage;
        case STS_ERR_DATA: return kExitData;
        case STS_ERR_DIVERGENCE: return kExitDivergence;
        case STS_ERR_INTERRUPTED: return kExitInterrupted;
        case STS_ERR_INTERNAL: return kExitData;
    }
    return kExitData;
}

int report(sts_status s) {
    if (s != STS_OK) std::fprintf(stderr, "error: %s\n", sts_last_error());
    return exit_code(s);
}

struct TextDeleter {
    void operator()(sts_text* t) const { sts_text_destroy(t); }
};
using Text = std::unique_ptr<sts_text, TextDeleter>;

struct ConfigDeleter {
    void operator()(sts_config* c) const { sts_config_destroy(c); }
};
struct GeneratorsDeleter {
    void operator()(sts_generators* g) const { sts_generators_destroy(g); }
};

extern "C" void on_sigint(int) { sts_request_stop(); }

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string scale;
    bool strict = false;
};

int scale_divisor(const std::string& s) {
    if (s == "1") return 1;
    if (s == "1/2" || s == "0.5") return 2;
    if (s == "1/4" || s == "0.25") return 4;
    return 0;
}

// Builds the configuration from --config, then the other global flags.
sts_status make_config(const Globals& g, std::unique_ptr<sts_config, ConfigDeleter>& out) {
    sts_config* c = nullptr;
    if (sts_status s = sts_config_create(&c); s != STS_OK) return s;
    out.reset(c);
    if (!g.config.empty())
        if (sts_status s = sts_config_load(c, g.config.c_str()); s != STS_OK) return s;
    if (g.seed)
        if (sts_status s = sts_config_set(c, "seed", std::to_string(*g.seed).c_str()); s != STS_OK) return s;
    if (!g.scale.empty())
        if (sts_status s = sts_config_set(c, "scale", g.scale.c_str()); s != STS_OK) return s;
    if (!g.out.empty())
        if (sts_status s = sts_config_set(c, "out_dir", g.out.c_str()); s != STS_OK) return s;
    return STS_OK;
}

std::string config_value(sts_config* c, const std::string& key) {
    sts_text* t = nullptr;
    if (sts_config_serialize(c, &t) != STS_OK) return {};
    Text hold(t);
    const std::string text = sts_text_data(t);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        const std::size_t eq = line.find('=');
        if (eq != std::string::npos) {
            std::string k = line.substr(0, eq);
            while (!k.empty() && k.back() == ' ') k.pop_back();
            if (k == key) {
                std::string v = line.substr(eq + 1);
                while (!v.empty() && v.front() == ' ') v.erase(v.begin());
                return v;
            }
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure and style generative models for indoor scenes"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Configuration file (key = value lines)");
    app.add_option("--seed", g.seed, "Seed for training and sampling");
    app.add_option("--out", g.out, "Training output directory");
    app.add_option("--scale", g.scale, "Desk scale: 1, 1/2 or 1/4");
    app.add_flag("--strict", g.strict, "Reject inputs that would otherwise be repaired");

    auto* train = app.add_subcommand("train", "Train one phase: fcn, structure, style or joint");
    std::string phase;
    std::uint64_t budget = 0;
    std::vector<std::string> overrides;
    train->add_option("phase", phase, "Phase to run")->required()->check(
        CLI::IsMember({"fcn", "structure", "style", "joint"}));
    train->add_option("--budget", budget, "Stop after this many iterations (0: run to completion)");
    train->add_option("--set", overrides, "Override a configuration key (key=value)");

    std::string checkpoint, dest;
    auto add_generation = [&](CLI::App* sub, const char* default_dest) {
        sub->add_option("--checkpoint", checkpoint, "Checkpoint file or training directory (default: --out)");
        sub->add_option("--dest", dest, std::string("Output directory (default: <out>/") + default_dest + ")");
    };

    auto* sample = app.add_subcommand("sample", "Draw structure and style noise and write outputs");
    std::int64_t count = 4;
    sample->add_option("--count", count, "Number of samples")->capture_default_str();
    add_generation(sample, "samples");

    auto* walk = app.add_subcommand("walk", "Latent walk over structure or style noise");
    std::string mode = "structure";
    sts_walk_options wopt;
    sts_walk_defaults(&wopt);
    walk->add_option("--mode", mode, "structure or style")->check(CLI::IsMember({"structure", "style"}))->capture_default_str();
    walk->add_option("--dims", wopt.dims, "Number of walked coordinates")->capture_default_str();
    walk->add_option("--step", wopt.step, "Increment per frame")->capture_default_str();
    walk->add_option("--frames", wopt.frames, "Number of frames")->capture_default_str();
    add_generation(walk, "walk");

    auto* render = app.add_subcommand("render", "Run the style generator on given normals");
    std::string normals_file;
    std::optional<std::uint64_t> scene_seed;
    std::int64_t render_count = 1;
    auto* nf = render->add_option("--normals", normals_file, "Normal image (PPM)");
    auto* ss = render->add_option("--scene-seed", scene_seed, "Use the ground-truth normals of a box-world scene");
    nf->excludes(ss);
    ss->excludes(nf);
    render->add_option("--count", render_count, "Number of style draws")->capture_default_str();
    add_generation(render, "render");

    auto* gradcheck = app.add_subcommand("gradcheck", "Central-difference gradient checks");
    std::string scope = "all";
    bool corrupt = false, list = false;
    gradcheck->add_option("--scope", scope, "ops, networks or all")
        ->check(CLI::IsMember({"ops", "networks", "all"}))
        ->capture_default_str();
    gradcheck->add_flag("--corrupt-fixture", corrupt, "Add a case with a deliberately wrong backward");
    gradcheck->add_flag("--list", list, "List the registered cases and exit");

    auto* audit = app.add_subcommand("audit", "Print layer and shape tables of all networks");

    for (auto* sub : {train, sample, walk, render, gradcheck, audit}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    std::unique_ptr<sts_config, ConfigDeleter> cfg;
    if (sts_status s = make_config(g, cfg); s != STS_OK) return report(s);
    const char* out_raw = nullptr;
    sts_config_out_dir(cfg.get(), &out_raw);
    const std::string out = out_raw ? out_raw : "out";
    const std::uint64_t seed = std::stoull(config_value(cfg.get(), "seed"));

    if (*train) {
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
                return kExitUsage;
            }
            const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
            if (sts_status s = sts_config_set(cfg.get(), key.c_str(), value.c_str()); s != STS_OK) return report(s);
        }
        std::signal(SIGINT, on_sigint);
        sts_train_result r{};
        const sts_status s = sts_train(cfg.get(), phase.c_str(), budget, &r);
        std::signal(SIGINT, SIG_DFL);
        if (s == STS_OK) {
            std::printf("%s: iterations %llu..%llu of %llu%s%s\n", phase.c_str(),
                        static_cast<unsigned long long>(r.start_iteration),
                        static_cast<unsigned long long>(r.end_iteration),
                        static_cast<unsigned long long>(r.total_iterations), r.complete ? ", complete" : "",
                        r.early_stopped ? ", early stop" : "");
            if (r.test_accuracy >= 0) std::printf("test pixel accuracy %.4f\n", r.test_accuracy);
        }
        return report(s);
    }

    if (*audit) {
        const std::string sc = g.scale.empty() ? config_value(cfg.get(), "scale") : g.scale;
        const int d = scale_divisor(sc);
        if (d == 0) {
            std::fprintf(stderr, "error: unknown scale '%s'\n", sc.c_str());
            return kExitUsage;
        }
        sts_text* t = nullptr;
        if (sts_status s = sts_audit(d, &t); s != STS_OK) return report(s);
        Text hold(t);
        std::fputs(sts_text_data(t), stdout);
        return 0;
    }

    if (*gradcheck) {
        sts_text* t = nullptr;
        if (list) {
            if (sts_status s = sts_gradcheck_cases(scope.c_str(), &t); s != STS_OK) return report(s);
            Text hold(t);
            std::fputs(sts_text_data(t), stdout);
            return 0;
        }
        int passed = 0;
        if (sts_status s = sts_gradcheck(scope.c_str(), corrupt ? 1 : 0, &passed, &t); s != STS_OK) return report(s);
        Text hold(t);
        std::fputs(sts_text_data(t), stdout);
        return passed ? 0 : kExitCheckFailed;
    }

    // Generation commands.
    const std::string source = checkpoint.empty() ? out : checkpoint;
    auto target = [&](const char* sub) { return dest.empty() ? out + "/" + sub : dest; };

    if (*sample && count == 0) return 0;
    sts_generators* raw = nullptr;
    if (sts_status s = sts_generators_load(source.c_str(), &raw); s != STS_OK) return report(s);
    std::unique_ptr<sts_generators, GeneratorsDeleter> gen(raw);

    if (*sample) {
        const std::string d = target("samples");
        if (sts_status s = sts_sample(gen.get(), seed, count, d.c_str()); s != STS_OK) return report(s);
        std::printf("wrote %lld samples to %s (checkpoint %s)\n", static_cast<long long>(count), d.c_str(),
                    sts_generators_checkpoint_id(gen.get()));
        return 0;
    }

    if (*walk) {
        wopt.mode = mode == "style" ? STS_WALK_STYLE : STS_WALK_STRUCTURE;
        wopt.seed = seed;
        const std::string d = target("walk");
        sts_text* t = nullptr;
        if (sts_status s = sts_walk(gen.get(), &wopt, d.c_str(), &t); s != STS_OK) return report(s);
        Text hold(t);
        std::printf("wrote %d %s-walk frames to %s\n%s", wopt.frames, mode.c_str(), d.c_str(), sts_text_data(t));
        return 0;
    }

    if (*render) {
        if (normals_file.empty() && !scene_seed) {
            std::fprintf(stderr, "error: render needs --normals or --scene-seed\n");
            return kExitUsage;
        }
        sts_render_options ro;
        sts_render_defaults(&ro);
        ro.normals_file = normals_file.empty() ? nullptr : normals_file.c_str();
        ro.use_scene_seed = scene_seed ? 1 : 0;
        ro.scene_seed = scene_seed.value_or(0);
        ro.seed = seed;
        ro.count = render_count;
        ro.strict = g.strict ? 1 : 0;
        const std::string d = target("render");
        sts_text* t = nullptr;
        const sts_status s = sts_render(gen.get(), &ro, d.c_str(), &t);
        Text hold(t);
        if (s != STS_OK) return report(s);
        const std::string warnings = sts_text_data(t);
        for (std::size_t p = 0, e; p < warnings.size(); p = e + 1) {
            e = warnings.find('\n', p);
            if (e == std::string::npos) e = warnings.size();
            std::fprintf(stderr, "warning: %s\n", warnings.substr(p, e - p).c_str());
        }
        std::printf("wrote %lld renders to %s\n", static_cast<long long>(render_count), d.c_str());
        return 0;
    }
    return kExitUsage;
}
