#include "stylestruct/normals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "stylestruct/error.hpp"

namespace stylestruct {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 normalized_or(const Vec3& v, const Vec3& fallback) {
    const double n = std::sqrt(dot(v, v));
    if (!(n > 1e-12)) return fallback;
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

int default_normal_window(Index side) { return side >= 128 ? 5 : 3; }

std::vector<float> normals_from_depth(const std::vector<float>& depth, Index width, Index height,
                                      const Intrinsics& in, int window) {
    if (window < 3 || window % 2 == 0) throw ConfigError("normals_from_depth: window must be odd and >= 3");
    if (static_cast<Index>(depth.size()) != width * height) throw ConfigError("normals_from_depth: size mismatch");
    const Index hw = width * height;
    std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(hw));
    for (Index i = 0; i < height; ++i)
        for (Index j = 0; j < width; ++j) {
            const double d = depth[static_cast<std::size_t>(i * width + j)];
            pts[static_cast<std::size_t>(i * width + j)] = {(static_cast<double>(j) + 0.5 - in.cx) * d / in.fx,
                                                            -(static_cast<double>(i) + 0.5 - in.cy) * d / in.fy, -d};
        }
    std::vector<float> out(static_cast<std::size_t>(3 * hw));
    const int r = window / 2;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
    for (Index i = 0; i < height; ++i)
        for (Index j = 0; j < width; ++j) {
            Eigen::Vector3d mean = Eigen::Vector3d::Zero();
            int n = 0;
            for (Index a = std::max<Index>(0, i - r); a <= std::min(height - 1, i + r); ++a)
                for (Index b = std::max<Index>(0, j - r); b <= std::min(width - 1, j + r); ++b) {
                    mean += pts[static_cast<std::size_t>(a * width + b)];
                    ++n;
                }
            mean /= n;
            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (Index a = std::max<Index>(0, i - r); a <= std::min(height - 1, i + r); ++a)
                for (Index b = std::max<Index>(0, j - r); b <= std::min(width - 1, j + r); ++b) {
                    const Eigen::Vector3d q = pts[static_cast<std::size_t>(a * width + b)] - mean;
                    cov += q * q.transpose();
                }
            Eigen::Vector3d nv(0, 0, 1);
            solver.computeDirect(cov);
            const auto& ev = solver.eigenvalues();  // ascending
            if (n >= 3 && ev(2) > 1e-20 && ev(1) > 1e-10 * ev(2)) {
                nv = solver.eigenvectors().col(0).normalized();
                const Eigen::Vector3d& p = pts[static_cast<std::size_t>(i * width + j)];
                const double facing = -nv.dot(p);  // towards the camera at the origin
                if (facing < 0 || (facing == 0 && nv.z() < 0)) nv = -nv;
            }
            const Index k = i * width + j;
            for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(c * hw + k)] = static_cast<float>(nv(c));
        }
    return out;
}

NormalCodebook kmeans_codebook(const std::vector<Vec3>& normals, int k, std::uint64_t seed) {
    if (k < 1) throw ConfigError("kmeans_codebook: k must be positive");
    if (normals.empty()) throw DataError("kmeans_codebook: no input normals");
    std::mt19937_64 rng(seed);
    NormalCodebook cb;
    const std::size_t n = normals.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    auto update_dist = [&](const Vec3& c) {
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], std::max(0.0, 1.0 - dot(normals[i], c)));
    };
    cb.centroids.push_back(normals[rng() % n]);
    update_dist(cb.centroids.back());
    while (static_cast<int>(cb.centroids.size()) < k) {
        double total = 0;
        for (double d : dist) total += d * d;
        std::size_t pick = 0;
        if (total <= 0) {
            cb.duplicates = true;
            pick = rng() % n;
        } else {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            pick = n;
            std::size_t last = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = dist[i] * dist[i];
                if (w <= 0) continue;
                last = i;
                u -= w;
                if (u < 0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = last;
        }
        cb.centroids.push_back(normals[pick]);
        update_dist(cb.centroids.back());
    }
    std::vector<std::int32_t> assign(n);
    for (cb.iterations = 1; cb.iterations <= 100; ++cb.iterations) {
        for (std::size_t i = 0; i < n; ++i) assign[i] = quantize_normal(normals[i], cb) - 1;
        std::vector<Vec3> sums(static_cast<std::size_t>(k), Vec3{0, 0, 0});
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) sums[static_cast<std::size_t>(assign[i])][c] += normals[i][c];
        double moved = 0;
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            const Vec3 next = normalized_or(sums[c], cb.centroids[c]);
            const Vec3 d{next[0] - cb.centroids[c][0], next[1] - cb.centroids[c][1], next[2] - cb.centroids[c][2]};
            moved = std::max(moved, std::sqrt(dot(d, d)));
            cb.centroids[c] = next;
        }
        if (moved < 1e-5) break;
    }
    cb.iterations = std::min(cb.iterations, 100);
    return cb;
}

std::int32_t quantize_normal(const Vec3& n, const NormalCodebook& cb) {
    std::int32_t best = 0;
    double best_dot = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cb.centroids.size(); ++c) {
        const double d = dot(n, cb.centroids[c]);
        if (d > best_dot) {
            best_dot = d;
            best = static_cast<std::int32_t>(c);
        }
    }
    return best + 1;
}

std::vector<std::int32_t> quantize_normals(const std::vector<float>& normals, Index hw, const NormalCodebook& cb) {
    if (static_cast<Index>(normals.size()) != 3 * hw) throw ConfigError("quantize_normals: size mismatch");
    std::vector<std::int32_t> out(static_cast<std::size_t>(hw));
    for (Index k = 0; k < hw; ++k)
        out[static_cast<std::size_t>(k)] =
            quantize_normal({normals[static_cast<std::size_t>(k)], normals[static_cast<std::size_t>(hw + k)],
                             normals[static_cast<std::size_t>(2 * hw + k)]},
                            cb);
    return out;
}

std::vector<float> dequantize(const std::vector<std::int32_t>& labels, const NormalCodebook& cb) {
    const std::size_t hw = labels.size();
    std::vector<float> out(3 * hw);
    for (std::size_t k = 0; k < hw; ++k) {
        const auto l = labels[k];
        if (l < 1 || static_cast<std::size_t>(l) > cb.size())
            throw DataError("dequantize: label " + std::to_string(l) + " outside [1, " + std::to_string(cb.size()) +
                            "]");
        for (std::size_t c = 0; c < 3; ++c) out[c * hw + k] = static_cast<float>(cb.centroids[static_cast<std::size_t>(l - 1)][c]);
    }
    return out;
}

void save_codebook(const NormalCodebook& cb, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write codebook '" + path + "'");
    char buf[96];
    for (const auto& c : cb.centroids) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", c[0], c[1], c[2]);
        f << buf;
    }
    if (!f) throw DataError("cannot write codebook '" + path + "'");
}

NormalCodebook load_codebook(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read codebook '" + path + "'");
    NormalCodebook cb;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream is(line);
        Vec3 v;
        if (!(is >> v[0] >> v[1] >> v[2]))
            throw DataError(path + ":" + std::to_string(lineno) + ": expected three numbers");
        const double n = std::sqrt(dot(v, v));
        if (std::abs(n - 1.0) > 1e-4) throw DataError(path + ":" + std::to_string(lineno) + ": not a unit vector");
        cb.centroids.push_back(v);
    }
    if (cb.centroids.empty()) throw DataError("codebook '" + path + "' is empty");
    return cb;
}

double angle_degrees(const Vec3& a, const Vec3& b) {
    const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
    if (na == 0 || nb == 0) return 180.0;
    return std::acos(std::clamp(dot(a, b) / (na * nb), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace stylestruct
