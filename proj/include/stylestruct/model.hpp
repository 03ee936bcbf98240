#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "stylestruct/adam.hpp"
#include "stylestruct/checkpoint.hpp"
#include "stylestruct/network.hpp"
#include "stylestruct/normals.hpp"

namespace stylestruct {

struct Net {
    NetworkSpec spec;
    NetworkParams<float> params;
    AdamState adam;
};

inline constexpr std::array<NetworkKind, 5> kAllNetworks = {
    NetworkKind::StructureGenerator, NetworkKind::StructureDiscriminator, NetworkKind::StyleGenerator,
    NetworkKind::StyleDiscriminator, NetworkKind::Fcn};

/// The five networks at one scale plus the normal codebook.
class Model {
public:
    /// Fresh initialisation; each network draws from its own seed stream.
    static Model create(Scale scale, std::uint64_t seed);

    /// Deep copy; the copy shares no tensors with this model.
    Model clone() const;

    /// Zeroes the weights and bias of the last fully connected layer. On a
    /// discriminator this pins every score to 0.5.
    void zero_output_layer(NetworkKind k);

    Scale scale() const { return scale_; }
    Net& net(NetworkKind k) { return nets_[static_cast<std::size_t>(k)]; }
    const Net& net(NetworkKind k) const { return nets_[static_cast<std::size_t>(k)]; }

    std::optional<NormalCodebook> codebook;

    /// [N,100] -> [N,3,s,s].
    Tensor<float> structure_generate(const Tensor<float>& z, Mode mode);
    /// [N,3,s,s] -> [N,1].
    Tensor<float> structure_score(const Tensor<float>& normals);
    /// ([N,3,S,S], [N,100]) -> [N,3,S,S].
    Tensor<float> style_generate(const Tensor<float>& normals, const Tensor<float>& z, Mode mode);
    /// ([N,3,S,S], [N,3,S,S]) -> [N,1].
    Tensor<float> style_score(const Tensor<float>& normals, const Tensor<float>& image);
    /// [N,3,S,S] -> [N,40,S,S].
    Tensor<float> fcn_logits(const Tensor<float>& image, Mode mode);
    /// Bilinear resize of structure output to the image side.
    Tensor<float> upsample_structure(const Tensor<float>& normals) const;

    /// Stores parameters, batch-norm statistics and optimizer state of one
    /// network under "<name>/...".
    void store(Archive& a, NetworkKind k) const;
    bool stored(const Archive& a, NetworkKind k) const;
    /// All-or-nothing restore. Missing or misshapen fields raise DataError.
    void restore(const Archive& a, NetworkKind k);

    void store_codebook(Archive& a) const;
    /// Returns false when the archive carries no codebook.
    bool restore_codebook(const Archive& a);

private:
    Scale scale_;
    std::array<Net, 5> nets_;
};

/// [n,100] uniform(-1,1) noise.
Tensor<float> uniform_noise(Index n, std::uint64_t seed);

/// Seed of one noise draw, a pure function of its coordinates.
std::uint64_t noise_seed(std::uint64_t seed, std::uint64_t phase, std::uint64_t iteration, std::uint64_t stream);

}  // namespace stylestruct
