#include "stylestruct/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stylestruct/error.hpp"
#include "stylestruct/image_io.hpp"

namespace stylestruct {

namespace fs = std::filesystem;

std::uint64_t scene_seed(std::uint64_t base_seed, Split split, Index index) {
    const std::uint64_t id = static_cast<std::uint64_t>(index) + (split == Split::Test ? (1ULL << 31) : 0ULL);
    return splitmix64(base_seed ^ splitmix64(id));
}

SceneDataset SceneDataset::generate(const DataConfig& cfg) {
    if (cfg.count <= 0) throw ConfigError("dataset count must be positive");
    if (cfg.count >= (1LL << 31)) throw ConfigError("dataset count too large");
    SceneDataset ds;
    ds.scale = cfg.scale;
    ds.split = cfg.split;
    ds.count = cfg.count;
    ds.image_side = cfg.scale.image_size();
    ds.structure_side = cfg.scale.structure_size();
    const Index si = ds.image_side * ds.image_side * 3, ss = ds.structure_side * ds.structure_side * 3;
    ds.images.resize(static_cast<std::size_t>(cfg.count * si));
    ds.normals.resize(static_cast<std::size_t>(cfg.count * si));
    ds.structure_normals.resize(static_cast<std::size_t>(cfg.count * ss));
    for (Index i = 0; i < cfg.count; ++i) {
        const auto seed = scene_seed(cfg.seed, cfg.split, i);
        ds.seeds.push_back(seed);
        const SceneParams p = sample_scene(seed);
        const SceneSample big = render_scene(p, ds.image_side, ds.image_side);
        const SceneSample small = render_scene(p, ds.structure_side, ds.structure_side);
        std::copy(big.rgb.begin(), big.rgb.end(), ds.images.begin() + i * si);
        std::copy(big.normals.begin(), big.normals.end(), ds.normals.begin() + i * si);
        std::copy(small.normals.begin(), small.normals.end(), ds.structure_normals.begin() + i * ss);
    }
    return ds;
}

void SceneDataset::assign_labels(const NormalCodebook& cb) {
    const Index hw = image_side * image_side;
    labels.resize(static_cast<std::size_t>(count * hw));
    for (Index i = 0; i < count; ++i) {
        std::vector<float> n(normals.begin() + i * 3 * hw, normals.begin() + (i + 1) * 3 * hw);
        const auto l = quantize_normals(n, hw, cb);
        std::copy(l.begin(), l.end(), labels.begin() + i * hw);
    }
}

NormalCodebook build_codebook(std::uint64_t base_seed, Scale scale, Index scenes, std::uint64_t seed,
                              std::size_t max_vectors) {
    const Index side = scale.image_size();
    const int window = default_normal_window(side);
    std::vector<Vec3> all;
    for (Index i = 0; i < scenes; ++i) {
        const SceneSample s = generate_scene(scene_seed(base_seed, Split::Train, i), side);
        const auto n = normals_from_depth(s.depth, side, side, s.intrinsics, window);
        const Index hw = side * side;
        for (Index k = 0; k < hw; ++k)
            all.push_back({n[static_cast<std::size_t>(k)], n[static_cast<std::size_t>(hw + k)],
                           n[static_cast<std::size_t>(2 * hw + k)]});
    }
    std::mt19937_64 rng(splitmix64(seed));
    if (all.size() > max_vectors) {
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(max_vectors);
    }
    return kmeans_codebook(all, static_cast<int>(kNormalClasses), seed);
}

Batch make_batch(const SceneDataset& ds, const std::vector<Index>& indices) {
    const Index b = static_cast<Index>(indices.size());
    const Index S = ds.image_side, s = ds.structure_side;
    const Index si = 3 * S * S, ss = 3 * s * s, hw = S * S;
    Batch out;
    out.indices = indices;
    std::vector<float> img(static_cast<std::size_t>(b * si)), nrm(static_cast<std::size_t>(b * si)),
        snrm(static_cast<std::size_t>(b * ss));
    if (!ds.labels.empty()) out.labels.resize(static_cast<std::size_t>(b * hw));
    for (Index k = 0; k < b; ++k) {
        const Index i = indices[static_cast<std::size_t>(k)];
        if (i < 0 || i >= ds.count) throw ConfigError("batch index out of range");
        std::copy_n(ds.images.begin() + i * si, si, img.begin() + k * si);
        std::copy_n(ds.normals.begin() + i * si, si, nrm.begin() + k * si);
        std::copy_n(ds.structure_normals.begin() + i * ss, ss, snrm.begin() + k * ss);
        if (!ds.labels.empty()) std::copy_n(ds.labels.begin() + i * hw, hw, out.labels.begin() + k * hw);
    }
    out.images = Tensor<float>({b, 3, S, S}, std::move(img));
    out.normals = Tensor<float>({b, 3, S, S}, std::move(nrm));
    out.structure_normals = Tensor<float>({b, 3, s, s}, std::move(snrm));
    return out;
}

BatchStream::BatchStream(const SceneDataset& ds, Index batch_size, std::uint64_t seed)
    : ds_(&ds), batch_(batch_size), seed_(seed) {
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    if (ds.count < batch_size)
        throw ConfigError("dataset has " + std::to_string(ds.count) + " samples, fewer than the batch size " +
                          std::to_string(batch_size));
}

std::vector<Index> BatchStream::indices(std::uint64_t step) {
    const auto bpe = static_cast<std::uint64_t>(batches_per_epoch());
    const std::uint64_t epoch = step / bpe, pos = step % bpe;
    if (epoch != cached_epoch_) {
        order_.resize(static_cast<std::size_t>(ds_->count));
        for (Index i = 0; i < ds_->count; ++i) order_[static_cast<std::size_t>(i)] = i;
        std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(epoch + 0x5eed)));
        std::shuffle(order_.begin(), order_.end(), rng);
        cached_epoch_ = epoch;
    }
    return {order_.begin() + static_cast<std::ptrdiff_t>(pos) * batch_,
            order_.begin() + static_cast<std::ptrdiff_t>(pos + 1) * batch_};
}

void save_sample(const SceneSample& s, const std::string& dir) {
    fs::create_directories(dir);
    Image16 depth{s.width, s.height, std::vector<std::uint16_t>(s.depth.size())};
    for (std::size_t i = 0; i < s.depth.size(); ++i)
        depth.data[i] = static_cast<std::uint16_t>(std::clamp(std::lround(s.depth[i] * 1000.0), 0L, 65535L));
    write_pgm16((fs::path(dir) / "depth.pgm").string(), depth);
    write_ppm((fs::path(dir) / "rgb.ppm").string(), encode_rgb_image(s.rgb.data(), s.width, s.height));
    std::ofstream meta(fs::path(dir) / "meta.txt");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", s.intrinsics.fx, s.intrinsics.fy, s.intrinsics.cx,
                  s.intrinsics.cy);
    meta << buf;
    if (!meta) throw DataError("cannot write '" + (fs::path(dir) / "meta.txt").string() + "'");
}

LoadedSample load_sample(const std::string& dir) {
    LoadedSample out;
    out.path = dir;
    try {
        const auto depth_path = (fs::path(dir) / "depth.pgm").string();
        const auto rgb_path = (fs::path(dir) / "rgb.ppm").string();
        const auto meta_path = (fs::path(dir) / "meta.txt").string();
        for (const auto& p : {depth_path, rgb_path, meta_path})
            if (!fs::exists(p)) throw DataError("missing file '" + p + "'");
        const Image16 depth = read_pgm16(depth_path);
        const Image8 rgb = read_ppm(rgb_path);
        if (rgb.width != depth.width || rgb.height != depth.height)
            throw DataError("'" + rgb_path + "' size differs from '" + depth_path + "'");
        std::ifstream meta(meta_path);
        SceneSample s;
        if (!(meta >> s.intrinsics.fx >> s.intrinsics.fy >> s.intrinsics.cx >> s.intrinsics.cy))
            throw DataError("'" + meta_path + "': expected fx fy cx cy");
        s.width = depth.width;
        s.height = depth.height;
        s.depth.resize(depth.data.size());
        for (std::size_t i = 0; i < depth.data.size(); ++i) {
            if (depth.data[i] == 0) throw DataError("'" + depth_path + "': zero depth at pixel " + std::to_string(i));
            s.depth[i] = static_cast<float>(depth.data[i] / 1000.0);
        }
        s.rgb = decode_rgb_image(rgb);
        s.normals = normals_from_depth(s.depth, s.width, s.height, s.intrinsics,
                                       default_normal_window(std::min(s.width, s.height)));
        out.sample = std::move(s);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<LoadedSample> load_external_rgbd(const std::string& root) {
    if (!fs::is_directory(root)) throw DataError("'" + root + "' is not a directory");
    std::vector<std::string> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) dirs.push_back(e.path().string());
    std::sort(dirs.begin(), dirs.end());
    std::vector<LoadedSample> out;
    for (const auto& d : dirs) out.push_back(load_sample(d));
    return out;
}

}  // namespace stylestruct
