#include "stylestruct/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "stylestruct/error.hpp"
#include "stylestruct/image_io.hpp"
#include "stylestruct/scene.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace stylestruct {
namespace {

// Noise streams of the output commands, disjoint from the training phases.
constexpr std::uint64_t kOutputPhase = 0x5a;
constexpr std::uint64_t kWalkDimsPhase = 0x5b;

constexpr double kUnitTolerance = 0.05;

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string digest(const Tensor<float>& t) {
    return hex64(fnv1a(t.values().data(), t.values().size() * sizeof(float)));
}

std::string fmt(const char* pattern, long long v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

json floats(const Tensor<float>& t) {
    json a = json::array();
    for (float v : t.values()) a.push_back(v);
    return a;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void require(const GeneratorBundle& g, bool structure) {
    if (structure && !g.has_structure)
        throw DataError("checkpoint " + g.checkpoint_id + " holds no structure generator");
    if (!g.has_style) throw DataError("checkpoint " + g.checkpoint_id + " holds no style generator");
}

struct Generated {
    Tensor<float> normals;  // [1,3,s,s] unit vectors
    Tensor<float> image;    // [1,3,S,S]
};

Generated generate(GeneratorBundle& g, const Tensor<float>& z_hat, const Tensor<float>& z_tilde) {
    Model& m = g.model;
    const Tensor<float> raw = m.structure_generate(z_hat, Mode::Eval).detach();
    const Tensor<float> img = m.style_generate(m.upsample_structure(raw), z_tilde, Mode::Eval).detach();
    return {unit_normals(raw), img};
}

void write_normals(const std::string& path, const Tensor<float>& n) {
    write_ppm(path, encode_normal_image(n.values().data(), n.dim(3), n.dim(2)));
}

void write_image(const std::string& path, const Tensor<float>& img) {
    write_ppm(path, encode_rgb_image(img.values().data(), img.dim(3), img.dim(2)));
}

json noise_json(const Tensor<float>& z_hat, const Tensor<float>& z_tilde) {
    json j;
    j["z_hat"] = floats(z_hat);
    j["z_hat_digest"] = digest(z_hat);
    j["z_tilde"] = floats(z_tilde);
    j["z_tilde_digest"] = digest(z_tilde);
    return j;
}

// Bilinear resampling with align-corners sampling, in both directions.
std::vector<float> resample(const std::vector<float>& src, Index sw, Index sh, Index dw, Index dh) {
    std::vector<float> out(static_cast<std::size_t>(3 * dw * dh));
    auto coord = [](Index i, Index dst, Index srcn) {
        return dst > 1 ? static_cast<double>(i) * static_cast<double>(srcn - 1) / static_cast<double>(dst - 1) : 0.0;
    };
    for (Index c = 0; c < 3; ++c)
        for (Index y = 0; y < dh; ++y) {
            const double fy = coord(y, dh, sh);
            const Index y0 = std::min<Index>(static_cast<Index>(fy), sh - 1), y1 = std::min<Index>(y0 + 1, sh - 1);
            const double ty = fy - static_cast<double>(y0);
            for (Index x = 0; x < dw; ++x) {
                const double fx = coord(x, dw, sw);
                const Index x0 = std::min<Index>(static_cast<Index>(fx), sw - 1), x1 = std::min<Index>(x0 + 1, sw - 1);
                const double tx = fx - static_cast<double>(x0);
                auto at = [&](Index yy, Index xx) { return static_cast<double>(src[static_cast<std::size_t>((c * sh + yy) * sw + xx)]); };
                const double v = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x1)) + ty * ((1 - tx) * at(y1, x0) + tx * at(y1, x1));
                out[static_cast<std::size_t>((c * dh + y) * dw + x)] = static_cast<float>(v);
            }
        }
    return out;
}

void renormalize(std::vector<float>& n, Index hw) {
    for (Index k = 0; k < hw; ++k) {
        float& x = n[static_cast<std::size_t>(k)];
        float& y = n[static_cast<std::size_t>(hw + k)];
        float& z = n[static_cast<std::size_t>(2 * hw + k)];
        const double len = std::sqrt(double(x) * x + double(y) * y + double(z) * z);
        if (len > 0) {
            x = static_cast<float>(x / len);
            y = static_cast<float>(y / len);
            z = static_cast<float>(z / len);
        } else {
            x = y = 0.f;
            z = 1.f;
        }
    }
}

// Count of pixels whose encoded vector is far from unit length.
Index non_unit_pixels(const Image8& img) {
    Index bad = 0;
    for (std::size_t k = 0; k + 2 < img.data.size(); k += 3) {
        const double a = decode_unit(img.data[k]), b = decode_unit(img.data[k + 1]), c = decode_unit(img.data[k + 2]);
        if (std::abs(std::sqrt(a * a + b * b + c * c) - 1.0) > kUnitTolerance) ++bad;
    }
    return bad;
}

}  // namespace

GeneratorBundle load_generators(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        const fs::path ck = fs::path(path) / "checkpoints";
        if (fs::exists(ck / "joint.ckpt")) {
            files.push_back((ck / "joint.ckpt").string());
        } else {
            for (const char* f : {"structure.ckpt", "style.ckpt"})
                if (fs::exists(ck / f)) files.push_back((ck / f).string());
        }
        if (files.empty()) throw DataError("no generator checkpoints under '" + ck.string() + "'");
    } else {
        if (!fs::exists(path)) throw DataError("checkpoint '" + path + "' does not exist");
        files.push_back(path);
    }
    GeneratorBundle g;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::optional<int> divisor;
    for (const auto& f : files) {
        const auto bytes = read_bytes(f);
        h = fnv1a(bytes.data(), bytes.size(), h);
        const Archive a = Archive::decode(bytes);
        const int d = static_cast<int>(a.u64_scalar("meta/scale_divisor"));
        if (divisor && *divisor != d) throw DataError("checkpoints under '" + path + "' differ in scale");
        if (!divisor) {
            divisor = d;
            g.model = Model::create(Scale{d}, 0);
        }
        if (g.model.stored(a, NetworkKind::StructureGenerator)) {
            g.model.restore(a, NetworkKind::StructureGenerator);
            g.has_structure = true;
        }
        if (g.model.stored(a, NetworkKind::StyleGenerator)) {
            g.model.restore(a, NetworkKind::StyleGenerator);
            g.has_style = true;
        }
        g.model.restore_codebook(a);
        g.sources.push_back(f);
    }
    if (!g.has_structure && !g.has_style) throw DataError("'" + path + "' holds no generator");
    g.checkpoint_id = hex64(h);
    return g;
}

Tensor<float> output_noise(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    return uniform_noise(1, noise_seed(seed, kOutputPhase, index, stream));
}

Tensor<float> unit_normals(const Tensor<float>& normals) {
    std::vector<float> v(normals.values().begin(), normals.values().end());
    const Index hw = normals.dim(2) * normals.dim(3);
    for (Index n = 0; n < normals.dim(0); ++n) {
        std::vector<float> one(v.begin() + 3 * hw * n, v.begin() + 3 * hw * (n + 1));
        renormalize(one, hw);
        std::copy(one.begin(), one.end(), v.begin() + 3 * hw * n);
    }
    return Tensor<float>(normals.shape(), std::move(v));
}

std::vector<OutputRecord> cmd_sample(GeneratorBundle& g, const SampleOptions& opt) {
    if (opt.count < 0) throw ConfigError("sample count must be >= 0");
    std::vector<OutputRecord> out;
    if (opt.count == 0) return out;
    require(g, true);
    fs::create_directories(opt.out_dir);
    for (Index i = 0; i < opt.count; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const Tensor<float> z_hat = output_noise(opt.seed, idx, 0), z_tilde = output_noise(opt.seed, idx, 1);
        const Generated gen = generate(g, z_hat, z_tilde);
        OutputRecord r{fmt("sample_%04lld_normals.ppm", i), fmt("sample_%04lld_image.ppm", i), fmt("sample_%04lld.json", i)};
        write_normals(join(opt.out_dir, r.normals_file), gen.normals);
        write_image(join(opt.out_dir, r.image_file), gen.image);
        json j;
        j["seed"] = opt.seed;
        j["index"] = i;
        j["scale"] = g.model.scale().str();
        j["checkpoint_id"] = g.checkpoint_id;
        j.update(noise_json(z_hat, z_tilde));
        j["normals_digest"] = digest(gen.normals);
        j["normals_file"] = r.normals_file;
        j["image_file"] = r.image_file;
        write_json(join(opt.out_dir, r.metadata_file), j);
        out.push_back(r);
    }
    return out;
}

WalkResult cmd_walk(GeneratorBundle& g, const WalkOptions& opt) {
    if (opt.dims < 1 || opt.dims > kNoiseDim) throw ConfigError("walk dims must be in [1, 100]");
    if (opt.frames < 1) throw ConfigError("walk frames must be >= 1");
    if (!std::isfinite(opt.step)) throw ConfigError("walk step must be finite");
    require(g, true);
    fs::create_directories(opt.out_dir);
    const bool structure = opt.mode == WalkMode::Structure;
    const std::string tag = structure ? "structure" : "style";
    const Tensor<float> z_hat0 = output_noise(opt.seed, 0, 0), z_tilde0 = output_noise(opt.seed, 0, 1);

    WalkResult res;
    std::vector<int> all(static_cast<std::size_t>(kNoiseDim));
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(noise_seed(opt.seed, kWalkDimsPhase, structure ? 0 : 1, 0));
    std::shuffle(all.begin(), all.end(), rng);
    res.dims.assign(all.begin(), all.begin() + opt.dims);
    std::sort(res.dims.begin(), res.dims.end());

    std::vector<Image8> sheet;
    json frames = json::array();
    for (int k = 0; k < opt.frames; ++k) {
        Tensor<float> z_hat = z_hat0.clone(), z_tilde = z_tilde0.clone();
        Tensor<float>& walked = structure ? z_hat : z_tilde;
        bool clamped = false;
        for (int d : res.dims) {
            float& v = walked.values()[static_cast<std::size_t>(d)];
            const double moved = static_cast<double>(v) + k * opt.step;
            if (moved > 1.0) clamped = true;
            v = static_cast<float>(std::min(1.0, moved));
        }
        if (clamped) res.clamped_frames.push_back(k);
        const Generated gen = generate(g, z_hat, z_tilde);
        OutputRecord r{fmt(("walk_" + tag + "_%02lld_normals.ppm").c_str(), k),
                       fmt(("walk_" + tag + "_%02lld_image.ppm").c_str(), k),
                       fmt(("walk_" + tag + "_%02lld.json").c_str(), k)};
        write_normals(join(opt.out_dir, r.normals_file), gen.normals);
        write_image(join(opt.out_dir, r.image_file), gen.image);
        sheet.push_back(encode_rgb_image(gen.image.values().data(), gen.image.dim(3), gen.image.dim(2)));
        json j;
        j["seed"] = opt.seed;
        j["mode"] = tag;
        j["frame"] = k;
        j["clamped"] = clamped;
        j["checkpoint_id"] = g.checkpoint_id;
        j.update(noise_json(z_hat, z_tilde));
        j["normals_digest"] = digest(gen.normals);
        j["normals_file"] = r.normals_file;
        j["image_file"] = r.image_file;
        write_json(join(opt.out_dir, r.metadata_file), j);
        frames.push_back(r.metadata_file);
        res.frames.push_back(r);
    }
    res.sheet_file = "walk_" + tag + "_sheet.ppm";
    write_ppm(join(opt.out_dir, res.sheet_file), contact_sheet(sheet));
    json summary;
    summary["seed"] = opt.seed;
    summary["mode"] = tag;
    summary["dims"] = res.dims;
    summary["step"] = opt.step;
    summary["frames"] = frames;
    summary["clamped_frames"] = res.clamped_frames;
    summary["checkpoint_id"] = g.checkpoint_id;
    summary["sheet_file"] = res.sheet_file;
    write_json(join(opt.out_dir, "walk_" + tag + ".json"), summary);
    return res;
}

void export_scene_normals(std::uint64_t scene_seed, Index side, const std::string& path) {
    const SceneSample s = generate_scene(scene_seed, side);
    write_ppm(path, encode_normal_image(s.normals.data(), side, side));
}

RenderResult cmd_render(GeneratorBundle& g, const RenderOptions& opt) {
    if (opt.count < 0) throw ConfigError("render count must be >= 0");
    if (opt.normals_file.empty() == !opt.scene_seed)
        throw ConfigError("render needs exactly one of a normals file or a scene seed");
    require(g, false);
    fs::create_directories(opt.out_dir);
    const Index side = g.model.scale().image_size();
    RenderResult res;

    std::string source = opt.normals_file;
    if (opt.scene_seed) {
        source = join(opt.out_dir, "render_scene_normals.ppm");
        export_scene_normals(*opt.scene_seed, side, source);
    }
    const Image8 img = read_ppm(source);
    auto problem = [&](const std::string& what, const char* repair) {
        if (opt.strict) throw DataError("'" + source + "': " + what);
        res.warnings.push_back("'" + source + "': " + what + "; " + repair);
    };
    if (const Index bad = non_unit_pixels(img); bad > 0)
        problem(std::to_string(bad) + " pixels are not unit normals", "renormalised");
    std::vector<float> n = decode_normal_image(img);
    if (img.width != side || img.height != side) {
        problem("size " + std::to_string(img.width) + "x" + std::to_string(img.height) + " differs from " +
                    std::to_string(side) + "x" + std::to_string(side),
                "resampled");
        n = resample(n, img.width, img.height, side, side);
        renormalize(n, side * side);
    }
    const Tensor<float> normals({1, 3, side, side}, std::move(n));
    res.normals_digest = digest(normals);
    const std::string normals_file = "render_normals.ppm";
    write_normals(join(opt.out_dir, normals_file), normals);

    for (Index i = 0; i < opt.count; ++i) {
        const Tensor<float> z_tilde = output_noise(opt.seed, static_cast<std::uint64_t>(i), 1);
        const Tensor<float> image = g.model.style_generate(normals, z_tilde, Mode::Eval).detach();
        OutputRecord r{normals_file, fmt("render_%04lld_image.ppm", i), fmt("render_%04lld.json", i)};
        write_image(join(opt.out_dir, r.image_file), image);
        json j;
        j["seed"] = opt.seed;
        j["index"] = i;
        j["scale"] = g.model.scale().str();
        j["checkpoint_id"] = g.checkpoint_id;
        if (opt.scene_seed)
            j["scene_seed"] = *opt.scene_seed;
        else
            j["source_file"] = opt.normals_file;
        j["z_tilde"] = floats(z_tilde);
        j["z_tilde_digest"] = digest(z_tilde);
        j["normals_digest"] = res.normals_digest;
        j["normals_file"] = r.normals_file;
        j["image_file"] = r.image_file;
        j["warnings"] = res.warnings;
        write_json(join(opt.out_dir, r.metadata_file), j);
        res.outputs.push_back(r);
    }
    return res;
}

std::string audit_report(Scale scale) {
    std::ostringstream os;
    for (NetworkKind k : kAllNetworks) {
        const NetworkSpec spec = build_network(k, scale);
        os << "== " << spec.name() << " (s=" << scale.str() << ")\n";
        os << format_spec_table(spec) << "\n";
        os << format_audit(shape_audit(spec)) << "\n";
    }
    return os.str();
}

}  // namespace stylestruct
