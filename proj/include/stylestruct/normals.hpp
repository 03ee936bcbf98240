#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylestruct/scene.hpp"

namespace stylestruct {

/// Per-pixel least-squares plane fit over a window x window neighbourhood of
/// unprojected depth points. Returns [3,H,W] unit normals facing the camera;
/// pixels whose neighbourhood is rank deficient get (0,0,1).
std::vector<float> normals_from_depth(const std::vector<float>& depth, Index width, Index height,
                                      const Intrinsics& intrinsics, int window);

/// Window used for a given image side: 5 at 128 and above, 3 below.
int default_normal_window(Index side);

struct NormalCodebook {
    std::vector<Vec3> centroids;  // unit vectors; label l is centroids[l-1]
    bool duplicates = false;      // fewer distinct inputs than k
    int iterations = 0;

    std::size_t size() const { return centroids.size(); }
};

/// Spherical k-means: assignment by maximum dot product, centroids
/// renormalised every iteration, k-means++ seeding. Stops after 100
/// iterations or when no centroid moves more than 1e-5.
NormalCodebook kmeans_codebook(const std::vector<Vec3>& normals, int k, std::uint64_t seed);

/// Label in [1, k] of the centroid with the largest dot product; ties go to
/// the lowest label.
std::int32_t quantize_normal(const Vec3& n, const NormalCodebook& cb);

/// [3,H,W] map to [H,W] labels.
std::vector<std::int32_t> quantize_normals(const std::vector<float>& normals, Index hw, const NormalCodebook& cb);

/// Labels to [3,H,W] centroid map. Throws DataError on labels outside [1, k].
std::vector<float> dequantize(const std::vector<std::int32_t>& labels, const NormalCodebook& cb);

/// Text format: one line per centroid, three space-separated decimals.
void save_codebook(const NormalCodebook& cb, const std::string& path);
NormalCodebook load_codebook(const std::string& path);

/// Angle between two vectors in degrees.
double angle_degrees(const Vec3& a, const Vec3& b);

}  // namespace stylestruct
