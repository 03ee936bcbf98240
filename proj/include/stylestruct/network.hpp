#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylestruct/ops.hpp"
#include "stylestruct/tensor.hpp"

namespace stylestruct {

inline constexpr Index kNoiseDim = 100;
inline constexpr Index kNormalClasses = 40;

/// Desk-scale factor s in {1, 1/2, 1/4}, stored as its denominator.
struct Scale {
    int divisor = 1;

    static Scale parse(const std::string& text);
    double value() const { return 1.0 / divisor; }
    std::string str() const;

    /// Side of the generated normal map (72 at full scale).
    Index structure_size() const { return 72 / divisor; }
    /// Side of images and conditioning normals (128 at full scale).
    Index image_size() const { return 128 / divisor; }
    /// Channel count scaled by s, floored at 8.
    Index channels(Index full) const;

    bool operator==(const Scale&) const = default;
};

enum class LayerKind { Input, FullyConnected, Reshape, Flatten, Conv, UConv, BatchNorm, Act, Upsample, MaxPool, Concat };

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind = LayerKind::Act;
    std::string name;
    std::string source;   // stream read; empty means the previous layer
    std::string source2;  // second operand of Concat
    Index channels = 0;   // output channels / features; Input and Reshape channel count
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    Activation act = Activation::None;
    Index height = 0;  // Input / Reshape / Upsample spatial target
    Index width = 0;
    Index expect_size = 0;  // expected output side, 0 = unchecked
    bool reconstructed = false;  // sizes not pinned by the published tables
};

enum class NetworkKind { StructureGenerator, StructureDiscriminator, StyleGenerator, StyleDiscriminator, Fcn };

const char* network_kind_name(NetworkKind k);

struct NetworkSpec {
    NetworkKind kind = NetworkKind::StructureGenerator;
    Scale scale;
    std::vector<LayerSpec> layers;

    std::string name() const { return network_kind_name(kind); }
    std::size_t count(LayerKind k) const;
    const LayerSpec& layer(const std::string& name) const;
};

NetworkSpec build_structure_generator(Scale scale);
NetworkSpec build_structure_discriminator(Scale scale);
NetworkSpec build_style_generator(Scale scale);
NetworkSpec build_style_discriminator(Scale scale);
NetworkSpec build_fcn(Scale scale);
NetworkSpec build_network(NetworkKind kind, Scale scale);

struct AuditRow {
    std::string layer;
    LayerKind kind;
    Shape in_shape;  // per-sample, no batch axis
    Shape out_shape;
};

/// Symbolic shape propagation. Throws ConfigError naming the offending layer.
std::vector<AuditRow> shape_audit(const NetworkSpec& spec);

/// Per-sample output shape of the network.
Shape output_shape(const NetworkSpec& spec);

/// Text table in the row layout of the published architecture table: one
/// column per weight layer with input size, kernel number, kernel size,
/// stride and the resolved padding.
std::string format_spec_table(const NetworkSpec& spec);

/// Full per-layer trace (every layer, in and out shapes).
std::string format_audit(const std::vector<AuditRow>& rows);

template <typename T>
struct NetworkParams {
    std::vector<std::pair<std::string, Tensor<T>>> tensors;
    std::map<std::string, BatchNormStats<T>> bn_stats;

    Tensor<T>& at(const std::string& name);
    const Tensor<T>& at(const std::string& name) const;
    bool contains(const std::string& name) const;
    Index count() const;
    void set_trainable(bool on);
    void zero_grad();

    /// Deep copy (fresh leaves) in another precision.
    template <typename U>
    NetworkParams<U> cast() const {
        NetworkParams<U> out;
        for (const auto& [n, t] : tensors) out.tensors.emplace_back(n, stylestruct::cast<U>(t, t.requires_grad()));
        for (const auto& [n, s] : bn_stats) {
            BatchNormStats<U> u;
            u.mean.assign(s.mean.begin(), s.mean.end());
            u.var.assign(s.var.begin(), s.var.end());
            out.bn_stats.emplace(n, std::move(u));
        }
        return out;
    }
    NetworkParams clone() const { return cast<T>(); }
};

/// Gaussian(0, 0.02) weights, zero biases, gamma 1, beta 0.
template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, std::uint64_t seed);

enum class Mode { Train, Eval };

template <typename T>
Tensor<T> forward(const NetworkSpec& spec, NetworkParams<T>& params,
                  const std::map<std::string, Tensor<T>>& inputs, Mode mode);

extern template struct NetworkParams<float>;
extern template struct NetworkParams<double>;

}  // namespace stylestruct
