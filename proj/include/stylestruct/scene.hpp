#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

using Vec3 = std::array<double, 3>;

struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// Pinhole intrinsics with the given horizontal field of view; square pixels,
/// principal point at the image centre.
Intrinsics make_intrinsics(Index width, Index height, double fov_degrees = 60.0);

struct Box {
    Vec3 min;  // world corners; boxes rest on the floor (min[1] == 0)
    Vec3 max;
    int albedo = 0;
};

/// Procedural room: floor y=0, back wall z=0, left wall x=0, and axis-aligned
/// boxes. The camera looks into the corner from x, y, z > 0.
struct SceneParams {
    std::uint64_t seed = 0;
    Vec3 camera{};
    Vec3 right{}, up{}, forward{};  // camera axes in world coordinates
    std::vector<Box> boxes;
    int floor_albedo = 0, back_albedo = 0, left_albedo = 0;
    Vec3 light{};  // unit vector towards the light, world coordinates
    double ambient = 0.3;
};

/// Surface ids in the rendered id map.
enum Surface : std::int16_t { kFloor = 0, kBackWall = 1, kLeftWall = 2, kFirstBox = 3 };

struct SceneSample {
    Index width = 0, height = 0;
    Intrinsics intrinsics;
    std::vector<float> depth;    // [H,W], metres along the optical axis
    std::vector<float> normals;  // [3,H,W], unit vectors in camera coordinates
    std::vector<float> rgb;      // [3,H,W], in [-1,1]
    std::vector<std::int16_t> surface;  // [H,W] surface id per pixel, -1 when unknown
    std::uint64_t seed = 0;
};

/// Draws a valid scene from `seed`. Degenerate draws (a box that is not
/// visible, a planar region that is too small, depth outside (0.1, 10)) are
/// resampled internally. `force_boxes` >= 0 fixes the number of boxes.
SceneParams sample_scene(std::uint64_t seed, int force_boxes = -1);

/// Ray-casts `params` at width x height. Deterministic.
SceneSample render_scene(const SceneParams& params, Index width, Index height);

/// sample_scene followed by render_scene at a square resolution.
SceneSample generate_scene(std::uint64_t seed, Index resolution, int force_boxes = -1);

/// Camera-space normal of a world-space direction.
Vec3 to_camera(const SceneParams& params, const Vec3& world_dir);

/// Number of distinct surfaces covering at least `min_pixels` pixels.
int count_regions(const SceneSample& s, Index min_pixels = 1);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace stylestruct
