#include "stylestruct/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "stylestruct/error.hpp"

namespace stylestruct {

namespace {

constexpr double kYawDeg = 20.0;    // towards the left wall
constexpr double kPitchDeg = 20.0;  // downwards
constexpr double kMinDepth = 0.1;
constexpr double kMaxDepth = 10.0;
constexpr Index kCheckRes = 32;

constexpr std::array<Vec3, 8> kPalette = {{
    {0.82, 0.78, 0.70},
    {0.62, 0.45, 0.30},
    {0.35, 0.50, 0.68},
    {0.70, 0.30, 0.28},
    {0.40, 0.62, 0.38},
    {0.86, 0.74, 0.40},
    {0.50, 0.44, 0.62},
    {0.30, 0.30, 0.32},
}};

const Vec3 kWorldNormals[3] = {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}};  // floor, back, left

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(dot(v, v));
    return {v[0] / n, v[1] / n, v[2] / n};
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int surface = -1;
    Vec3 normal{};
};

Hit cast_ray(const SceneParams& p, const Vec3& dir) {
    Hit h;
    const Vec3& c = p.camera;
    auto plane = [&](int axis, int surface) {
        if (dir[axis] >= 0) return;
        const double t = -c[axis] / dir[axis];
        if (t > 0 && t < h.t) h = {t, surface, kWorldNormals[surface]};
    };
    plane(1, kFloor);
    plane(2, kBackWall);
    plane(0, kLeftWall);
    for (std::size_t b = 0; b < p.boxes.size(); ++b) {
        const Box& box = p.boxes[b];
        double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
        int axis_in = -1;
        bool miss = false;
        for (int a = 0; a < 3 && !miss; ++a) {
            if (dir[a] == 0.0) {
                if (c[a] < box.min[a] || c[a] > box.max[a]) miss = true;
                continue;
            }
            double ta = (box.min[a] - c[a]) / dir[a], tb = (box.max[a] - c[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            if (ta > t0) {
                t0 = ta;
                axis_in = a;
            }
            t1 = std::min(t1, tb);
        }
        if (miss || t0 > t1 || t0 <= 0 || axis_in < 0 || t0 >= h.t) continue;
        Vec3 n{0, 0, 0};
        n[static_cast<std::size_t>(axis_in)] = dir[axis_in] > 0 ? -1.0 : 1.0;
        h = {t0, kFirstBox + static_cast<int>(b), n};
    }
    return h;
}

bool valid(const SceneParams& p) {
    const SceneSample s = render_scene(p, kCheckRes, kCheckRes);
    for (float d : s.depth)
        if (!(d > kMinDepth && d < kMaxDepth)) return false;
    std::map<int, Index> counts;
    for (auto id : s.surface) ++counts[id];
    const Index plane_min = kCheckRes * kCheckRes * 3 / 100;
    for (int id : {kFloor, kBackWall, kLeftWall})
        if (counts[id] < plane_min) return false;
    for (std::size_t b = 0; b < p.boxes.size(); ++b)
        if (counts[kFirstBox + static_cast<int>(b)] < 4) return false;
    return true;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Intrinsics make_intrinsics(Index width, Index height, double fov_degrees) {
    const double f = static_cast<double>(width) / (2.0 * std::tan(fov_degrees * std::numbers::pi / 360.0));
    return {f, f, static_cast<double>(width) / 2.0, static_cast<double>(height) / 2.0};
}

Vec3 to_camera(const SceneParams& p, const Vec3& d) {
    return {dot(p.right, d), dot(p.up, d), -dot(p.forward, d)};
}

SceneParams sample_scene(std::uint64_t seed, int force_boxes) {
    const double yaw = kYawDeg * std::numbers::pi / 180.0, pitch = kPitchDeg * std::numbers::pi / 180.0;
    SceneParams p;
    p.seed = seed;
    p.forward = {-std::sin(yaw) * std::cos(pitch), -std::sin(pitch), -std::cos(yaw) * std::cos(pitch)};
    p.right = normalized(cross(p.forward, {0, 1, 0}));
    p.up = cross(p.right, p.forward);
    for (std::uint64_t attempt = 0;; ++attempt) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(attempt)));
        auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
        auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
        p.camera = {uni(2.2, 3.2), uni(1.3, 1.8), uni(3.5, 4.5)};
        // After many failed draws fall back to fewer boxes so sampling terminates.
        int n = force_boxes >= 0 ? force_boxes : 1 + pick(4);
        if (force_boxes < 0 && attempt >= 200) n = std::max(0, n - static_cast<int>((attempt - 200) / 50 + 1));
        p.boxes.clear();
        // Keeping boxes left of and in front of the camera means only their
        // +x, +y and +z faces can be seen, all of which face the camera.
        const double x_limit = p.camera[0] - 0.05, z_limit = p.camera[2] - 0.5;
        for (int b = 0; b < n; ++b) {
            const double w = uni(0.35, 1.0), d = uni(0.35, 1.0), h = uni(0.3, 1.0);
            const double x0 = uni(0.0, x_limit - w), z0 = uni(0.0, z_limit - d);
            p.boxes.push_back({{x0, 0.0, z0}, {x0 + w, h, z0 + d}, pick(static_cast<int>(kPalette.size()))});
        }
        p.floor_albedo = pick(static_cast<int>(kPalette.size()));
        p.back_albedo = pick(static_cast<int>(kPalette.size()));
        p.left_albedo = pick(static_cast<int>(kPalette.size()));
        const double az = uni(0.0, 2.0 * std::numbers::pi), el = uni(25.0, 80.0) * std::numbers::pi / 180.0;
        p.light = {std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az)};
        p.ambient = uni(0.2, 0.4);
        if (valid(p)) return p;
        if (attempt > 10000) throw DataError("scene sampling did not converge for seed " + std::to_string(seed));
    }
}

SceneSample render_scene(const SceneParams& p, Index width, Index height) {
    if (width <= 0 || height <= 0) throw ConfigError("render_scene: resolution must be positive");
    SceneSample s;
    s.width = width;
    s.height = height;
    s.seed = p.seed;
    s.intrinsics = make_intrinsics(width, height);
    const Index hw = width * height;
    s.depth.assign(static_cast<std::size_t>(hw), 0.f);
    s.normals.assign(static_cast<std::size_t>(3 * hw), 0.f);
    s.rgb.assign(static_cast<std::size_t>(3 * hw), 0.f);
    s.surface.assign(static_cast<std::size_t>(hw), -1);
    const auto& in = s.intrinsics;
    for (Index i = 0; i < height; ++i)
        for (Index j = 0; j < width; ++j) {
            const double xc = (static_cast<double>(j) + 0.5 - in.cx) / in.fx;
            const double yc = -(static_cast<double>(i) + 0.5 - in.cy) / in.fy;
            Vec3 dir;
            for (int a = 0; a < 3; ++a) dir[a] = xc * p.right[a] + yc * p.up[a] + p.forward[a];
            const Hit h = cast_ray(p, dir);
            const Index k = i * width + j;
            s.depth[static_cast<std::size_t>(k)] = static_cast<float>(h.t);
            s.surface[static_cast<std::size_t>(k)] = static_cast<std::int16_t>(h.surface);
            const Vec3 n = to_camera(p, h.normal);
            for (int c = 0; c < 3; ++c) s.normals[static_cast<std::size_t>(c * hw + k)] = static_cast<float>(n[c]);
            int albedo = h.surface == kFloor       ? p.floor_albedo
                         : h.surface == kBackWall ? p.back_albedo
                         : h.surface == kLeftWall ? p.left_albedo
                                                  : p.boxes[static_cast<std::size_t>(h.surface - kFirstBox)].albedo;
            const double shade = p.ambient + (1.0 - p.ambient) * std::max(0.0, dot(h.normal, p.light));
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(kPalette[static_cast<std::size_t>(albedo)][c] * shade, 0.0, 1.0);
                s.rgb[static_cast<std::size_t>(c * hw + k)] = static_cast<float>(2.0 * v - 1.0);
            }
        }
    return s;
}

SceneSample generate_scene(std::uint64_t seed, Index resolution, int force_boxes) {
    return render_scene(sample_scene(seed, force_boxes), resolution, resolution);
}

int count_regions(const SceneSample& s, Index min_pixels) {
    std::map<int, Index> counts;
    for (auto id : s.surface)
        if (id >= 0) ++counts[id];
    return static_cast<int>(
        std::count_if(counts.begin(), counts.end(), [&](const auto& kv) { return kv.second >= min_pixels; }));
}

}  // namespace stylestruct
