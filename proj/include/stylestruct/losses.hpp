#pragma once

#include <cstdint>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

inline constexpr double kScoreClamp = 1e-7;

/// -[y log s + (1-y) log(1-s)] with s clamped to [1e-7, 1-1e-7].
double binary_cross_entropy(double score, int label);

/// Differentiable sum of binary_cross_entropy over every element of `scores`.
/// The clamp is a true clamp: saturated scores pass no gradient.
template <typename T>
Tensor<T> bce_sum(const Tensor<T>& scores, int label);

// Adversarial losses. All are sums over the half batch, never means.
// Discriminator losses expect the generated scores to come from detached
// samples; generator losses chain through D into G.

/// real -> 1, generated -> 0.
template <typename T>
Tensor<T> gan_d_loss(const Tensor<T>& real_scores, const Tensor<T>& fake_scores);

/// generated -> 1 (non-saturating form).
template <typename T>
Tensor<T> gan_g_loss(const Tensor<T>& fake_scores);

/// Conditional discriminator loss. Positives are only real images paired with
/// their own normal maps.
template <typename T>
Tensor<T> cond_d_loss(const Tensor<T>& real_pair_scores, const Tensor<T>& fake_pair_scores);

template <typename T>
Tensor<T> cond_g_loss(const Tensor<T>& fake_pair_scores);

/// Pixel-wise normal classification loss: summed over samples, averaged over
/// the K*K pixels. `labels` holds 1-based class ids in [N,K,K] order.
template <typename T>
Tensor<T> fcn_loss(const Tensor<T>& logits, const std::vector<std::int32_t>& labels);

/// Generator loss with the pixel-wise constraint: plain unweighted sum.
template <typename T>
Tensor<T> style_g_multitask_loss(const Tensor<T>& cond_g_term, const Tensor<T>& fcn_term);

/// Structure generator loss during joint learning: own adversarial term plus
/// lambda times the style generator's loss on the structure output.
template <typename T>
Tensor<T> joint_structure_g_loss(const Tensor<T>& structure_g_term, const Tensor<T>& style_chain_term,
                                 double lambda);

}  // namespace stylestruct
