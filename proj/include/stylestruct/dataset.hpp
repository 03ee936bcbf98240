#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stylestruct/network.hpp"
#include "stylestruct/normals.hpp"
#include "stylestruct/scene.hpp"

namespace stylestruct {

enum class Split { Train, Test };

/// Scene seed for the index-th sample of a split. Train draws ids from
/// [0, 2^31) and test from [2^31, 2^32), so the splits never share a scene.
std::uint64_t scene_seed(std::uint64_t base_seed, Split split, Index index);

struct DataConfig {
    Index count = 512;
    Scale scale{4};
    std::uint64_t seed = 1;
    Split split = Split::Train;
};

/// In-memory box-world samples as channel-first float arrays in [-1,1].
struct SceneDataset {
    Scale scale;
    Split split = Split::Train;
    Index count = 0;
    Index image_side = 0;      // 128 * s
    Index structure_side = 0;  // 72 * s
    std::vector<float> images;             // [count,3,S,S]
    std::vector<float> normals;            // [count,3,S,S] ground truth at image resolution
    std::vector<float> structure_normals;  // [count,3,s,s] ground truth at structure resolution
    std::vector<std::int32_t> labels;      // [count,S,S], filled by assign_labels
    std::vector<std::uint64_t> seeds;

    static SceneDataset generate(const DataConfig& cfg);

    /// Quantises the ground-truth normals into class labels.
    void assign_labels(const NormalCodebook& cb);
};

/// Codebook over normals estimated from rendered depth of the first
/// `scenes` training scenes, subsampled to at most `max_vectors`.
NormalCodebook build_codebook(std::uint64_t base_seed, Scale scale, Index scenes, std::uint64_t seed,
                              std::size_t max_vectors = 50000);

struct Batch {
    std::vector<Index> indices;
    Tensor<float> images;             // [B,3,S,S]
    Tensor<float> normals;            // [B,3,S,S]
    Tensor<float> structure_normals;  // [B,3,s,s]
    std::vector<std::int32_t> labels; // [B,S,S], empty when unlabelled
};

Batch make_batch(const SceneDataset& ds, const std::vector<Index>& indices);

/// Deterministic shuffled batches. The batch for global step t is a pure
/// function of (seed, t), so a resumed run sees the same sequence.
class BatchStream {
public:
    BatchStream(const SceneDataset& ds, Index batch_size, std::uint64_t seed);

    Index batches_per_epoch() const { return ds_->count / batch_; }
    std::vector<Index> indices(std::uint64_t step);
    Batch batch(std::uint64_t step) { return make_batch(*ds_, indices(step)); }

private:
    const SceneDataset* ds_;
    Index batch_;
    std::uint64_t seed_;
    std::uint64_t cached_epoch_ = ~0ULL;
    std::vector<Index> order_;
};

/// On-disk sample: depth.pgm (16-bit millimetres), rgb.ppm, meta.txt with
/// "fx fy cx cy".
void save_sample(const SceneSample& s, const std::string& dir);

struct LoadedSample {
    std::string path;
    std::optional<SceneSample> sample;
    std::string error;  // set when sample is empty
};

/// Reads every sample directory below `root` in name order. A malformed
/// sample yields an entry with an error naming the file; the others still load.
/// Normals are recomputed from depth.
std::vector<LoadedSample> load_external_rgbd(const std::string& root);
LoadedSample load_sample(const std::string& dir);

}  // namespace stylestruct
