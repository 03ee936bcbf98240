#include "stylestruct/stylestruct.h"

#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "stylestruct/app.hpp"
#include "stylestruct/config.hpp"
#include "stylestruct/error.hpp"
#include "stylestruct/trainer.hpp"

struct sts_config {
    stylestruct::TrainConfig cfg;
};

struct sts_generators {
    stylestruct::GeneratorBundle bundle;
};

struct sts_text {
    std::string text;
};

namespace {

thread_local std::string g_last_error;

sts_status fail(sts_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <typename F>
sts_status guarded(F&& f) {
    try {
        f();
        return STS_OK;
    } catch (const stylestruct::ConfigError& e) {
        return fail(STS_ERR_USAGE, e.what());
    } catch (const stylestruct::DataError& e) {
        return fail(STS_ERR_DATA, e.what());
    } catch (const stylestruct::DivergenceError& e) {
        return fail(STS_ERR_DIVERGENCE, e.what());
    } catch (const stylestruct::InterruptedError& e) {
        return fail(STS_ERR_INTERRUPTED, e.what());
    } catch (const std::bad_alloc&) {
        return fail(STS_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(STS_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(STS_ERR_INTERNAL, "unknown error");
    }
}

sts_status null_arg(const char* name) { return fail(STS_ERR_USAGE, std::string("argument '") + name + "' is null"); }

void put_text(sts_text** out, std::string s) {
    if (out) *out = new sts_text{std::move(s)};
}

stylestruct::Scale scale_of(int divisor) {
    if (divisor != 1 && divisor != 2 && divisor != 4) throw stylestruct::ConfigError("scale divisor must be 1, 2 or 4");
    return stylestruct::Scale{divisor};
}

}  // namespace

extern "C" {

const char* sts_last_error(void) { return g_last_error.c_str(); }

const char* sts_version(void) { return "1.0.0"; }

const char* sts_text_data(const sts_text* t) { return t ? t->text.c_str() : ""; }

void sts_text_destroy(sts_text* t) { delete t; }

sts_status sts_config_create(sts_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new sts_config{}; });
}

void sts_config_destroy(sts_config* c) { delete c; }

sts_status sts_config_load(sts_config* c, const char* path) {
    if (!c) return null_arg("config");
    if (!path) return null_arg("path");
    return guarded([&] { c->cfg = stylestruct::load_config(path, c->cfg); });
}

sts_status sts_config_set(sts_config* c, const char* key, const char* value) {
    if (!c) return null_arg("config");
    if (!key) return null_arg("key");
    if (!value) return null_arg("value");
    return guarded([&] { c->cfg.set(key, value); });
}

sts_status sts_config_serialize(const sts_config* c, sts_text** out) {
    if (!c) return null_arg("config");
    if (!out) return null_arg("out");
    return guarded([&] { put_text(out, c->cfg.serialize()); });
}

sts_status sts_config_out_dir(const sts_config* c, const char** out) {
    if (!c) return null_arg("config");
    if (!out) return null_arg("out");
    *out = c->cfg.out_dir.c_str();
    return STS_OK;
}

sts_status sts_train(const sts_config* c, const char* phase, uint64_t budget, sts_train_result* out) {
    if (!c) return null_arg("config");
    if (!phase) return null_arg("phase");
    return guarded([&] {
        c->cfg.validate();
        const stylestruct::Phase p = stylestruct::parse_phase(phase);
        stylestruct::Trainer t(c->cfg);
        t.set_iteration_budget(budget);
        const stylestruct::PhaseReport r = t.run(p);
        if (out) {
            out->start_iteration = r.start_iteration;
            out->end_iteration = r.end_iteration;
            out->total_iterations = r.total_iterations;
            out->complete = r.complete ? 1 : 0;
            out->early_stopped = r.early_stopped ? 1 : 0;
            out->test_accuracy = r.test_accuracy;
        }
    });
}

void sts_request_stop(void) { stylestruct::request_stop(); }

void sts_clear_stop(void) { stylestruct::clear_stop(); }

sts_status sts_generators_load(const char* path, sts_generators** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new sts_generators{stylestruct::load_generators(path)}; });
}

void sts_generators_destroy(sts_generators* g) { delete g; }

const char* sts_generators_checkpoint_id(const sts_generators* g) { return g ? g->bundle.checkpoint_id.c_str() : ""; }

int sts_generators_scale_divisor(const sts_generators* g) { return g ? g->bundle.model.scale().divisor : 0; }

sts_status sts_sample(sts_generators* g, uint64_t seed, int64_t count, const char* out_dir) {
    if (!g) return null_arg("generators");
    if (!out_dir) return null_arg("out_dir");
    return guarded([&] {
        stylestruct::SampleOptions o;
        o.count = count;
        o.seed = seed;
        o.out_dir = out_dir;
        stylestruct::cmd_sample(g->bundle, o);
    });
}

void sts_walk_defaults(sts_walk_options* o) {
    if (!o) return;
    const stylestruct::WalkOptions d;
    o->mode = STS_WALK_STRUCTURE;
    o->seed = d.seed;
    o->dims = d.dims;
    o->step = d.step;
    o->frames = d.frames;
}

sts_status sts_walk(sts_generators* g, const sts_walk_options* o, const char* out_dir, sts_text** summary) {
    if (!g) return null_arg("generators");
    if (!o) return null_arg("options");
    if (!out_dir) return null_arg("out_dir");
    if (o->mode != STS_WALK_STRUCTURE && o->mode != STS_WALK_STYLE) return fail(STS_ERR_USAGE, "unknown walk mode");
    return guarded([&] {
        stylestruct::WalkOptions w;
        w.mode = o->mode == STS_WALK_STYLE ? stylestruct::WalkMode::Style : stylestruct::WalkMode::Structure;
        w.seed = o->seed;
        w.dims = o->dims;
        w.step = o->step;
        w.frames = o->frames;
        w.out_dir = out_dir;
        const auto r = stylestruct::cmd_walk(g->bundle, w);
        std::ostringstream os;
        os << "dims";
        for (int d : r.dims) os << ' ' << d;
        os << "\nclamped_frames";
        for (int k : r.clamped_frames) os << ' ' << k;
        os << "\nsheet " << r.sheet_file << '\n';
        put_text(summary, os.str());
    });
}

void sts_render_defaults(sts_render_options* o) {
    if (!o) return;
    const stylestruct::RenderOptions d;
    o->normals_file = nullptr;
    o->use_scene_seed = 0;
    o->scene_seed = 0;
    o->seed = d.seed;
    o->count = d.count;
    o->strict = 0;
}

sts_status sts_render(sts_generators* g, const sts_render_options* o, const char* out_dir, sts_text** warnings) {
    if (!g) return null_arg("generators");
    if (!o) return null_arg("options");
    if (!out_dir) return null_arg("out_dir");
    return guarded([&] {
        stylestruct::RenderOptions r;
        if (o->normals_file) r.normals_file = o->normals_file;
        if (o->use_scene_seed) r.scene_seed = o->scene_seed;
        r.seed = o->seed;
        r.count = o->count;
        r.strict = o->strict != 0;
        r.out_dir = out_dir;
        const auto res = stylestruct::cmd_render(g->bundle, r);
        std::string w;
        for (const auto& line : res.warnings) w += line + "\n";
        put_text(warnings, std::move(w));
    });
}

sts_status sts_export_scene_normals(uint64_t scene_seed, int scale_divisor, const char* path) {
    if (!path) return null_arg("path");
    return guarded(
        [&] { stylestruct::export_scene_normals(scene_seed, scale_of(scale_divisor).image_size(), path); });
}

sts_status sts_audit(int scale_divisor, sts_text** out) {
    if (!out) return null_arg("out");
    return guarded([&] { put_text(out, stylestruct::audit_report(scale_of(scale_divisor))); });
}

sts_status sts_gradcheck(const char* scope, int corrupt_fixture, int* passed, sts_text** report) {
    if (!scope) return null_arg("scope");
    return guarded([&] {
        const auto r = stylestruct::run_gradcheck(scope, corrupt_fixture != 0);
        if (passed) *passed = r.pass ? 1 : 0;
        put_text(report, stylestruct::format_gradcheck_report(r));
    });
}

sts_status sts_gradcheck_cases(const char* scope, sts_text** names) {
    if (!scope) return null_arg("scope");
    if (!names) return null_arg("names");
    return guarded([&] {
        std::string s;
        for (const auto& n : stylestruct::gradcheck_case_names(scope)) s += n + "\n";
        put_text(names, std::move(s));
    });
}

}  // extern "C"
