#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stylestruct/model.hpp"

namespace stylestruct {

/// Generators restored from training output.
struct GeneratorBundle {
    Model model;
    std::string checkpoint_id;  // digest of the checkpoint bytes
    std::vector<std::string> sources;
    bool has_structure = false;
    bool has_style = false;
};

/// `path` is a checkpoint file or a training output directory. A directory
/// resolves to checkpoints/joint.ckpt, else to the structure and style
/// checkpoints together.
GeneratorBundle load_generators(const std::string& path);

/// [1,100] noise for output `index`; stream 0 is the structure noise and
/// stream 1 the style noise.
Tensor<float> output_noise(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Scales each pixel of a [N,3,H,W] map to unit length.
Tensor<float> unit_normals(const Tensor<float>& normals);

struct OutputRecord {
    std::string normals_file;
    std::string image_file;
    std::string metadata_file;
};

struct SampleOptions {
    Index count = 4;
    std::uint64_t seed = 1;
    std::string out_dir = "samples";
};

/// Draws (z_hat, z_tilde) pairs and writes sample_NNNN_{normals,image}.ppm
/// plus a JSON sidecar each. Networks run with eval-mode batch norm.
std::vector<OutputRecord> cmd_sample(GeneratorBundle& g, const SampleOptions& opt);

enum class WalkMode { Structure, Style };

struct WalkOptions {
    WalkMode mode = WalkMode::Structure;
    std::uint64_t seed = 1;
    int dims = 10;
    double step = 0.1;
    int frames = 7;
    std::string out_dir = "walk";
};

struct WalkResult {
    std::vector<OutputRecord> frames;
    std::vector<int> dims;            // walked coordinates
    std::vector<int> clamped_frames;  // frames where some coordinate hit 1
    std::string sheet_file;
};

/// Frame k adds k*step to `dims` random coordinates of one noise vector and
/// holds the other fixed. Frame 0 is sample 0 of the same seed.
WalkResult cmd_walk(GeneratorBundle& g, const WalkOptions& opt);

struct RenderOptions {
    std::string normals_file;                // PPM normal image, or
    std::optional<std::uint64_t> scene_seed; // ground truth of a box-world scene
    std::uint64_t seed = 1;
    Index count = 1;
    bool strict = false;
    std::string out_dir = "render";
};

struct RenderResult {
    std::vector<OutputRecord> outputs;
    std::vector<std::string> warnings;
    std::string normals_digest;
};

/// Runs the style generator on given normals. Scene normals pass through
/// the 8-bit normal encoding so that a scene and its exported normal image
/// render identically. Wrong sizes and non-unit vectors are fixed with a
/// warning, or rejected with DataError when strict.
RenderResult cmd_render(GeneratorBundle& g, const RenderOptions& opt);

/// Writes the box-world ground-truth normals of `scene_seed` at `side` as a
/// normal image.
void export_scene_normals(std::uint64_t scene_seed, Index side, const std::string& path);

/// Layer tables and full shape traces of all five networks.
std::string audit_report(Scale scale);

// ---- gradient-check suite ----------------------------------------------

struct GradCheckCase {
    std::string name;
    std::string scope;  // "ops" or "networks"
    double max_rel_error = 0;
    std::size_t coords = 0;
    std::string worst;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    bool pass = true;
    double seconds = 0;
    std::string worst_case;
    double worst_error = 0;
};

inline constexpr double kGradCheckTolerance = 1e-3;

/// Names of the registered cases in `scope` ("ops", "networks" or "all").
std::vector<std::string> gradcheck_case_names(const std::string& scope);

/// Runs the suite in double precision. `corrupt_fixture` appends a case with
/// a deliberately wrong backward.
GradCheckReport run_gradcheck(const std::string& scope, bool corrupt_fixture = false);

std::string format_gradcheck_report(const GradCheckReport& r);

}  // namespace stylestruct
