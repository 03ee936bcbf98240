#include "stylestruct/losses.hpp"

#include <algorithm>
#include <cmath>

#include "stylestruct/error.hpp"
#include "stylestruct/ops.hpp"

namespace stylestruct {

double binary_cross_entropy(double score, int label) {
    const double s = std::clamp(score, kScoreClamp, 1.0 - kScoreClamp);
    return label ? -std::log(s) : -std::log(1.0 - s);
}

template <typename T>
Tensor<T> bce_sum(const Tensor<T>& scores, int label) {
    const T lo = static_cast<T>(kScoreClamp);
    const T hi = static_cast<T>(1.0 - kScoreClamp);
    double total = 0.0;
    for (T s : scores.values()) total += binary_cross_entropy(static_cast<double>(s), label);
    auto* sn = scores.node();
    return Tensor<T>::make_result({1}, {static_cast<T>(total)}, {scores}, "bce_sum",
                                  [=](detail::Node<T>& o) {
                                      sn->ensure_grad();
                                      const T g = o.grad[0];
                                      for (std::size_t i = 0; i < sn->value.size(); ++i) {
                                          const T s = sn->value[i];
                                          if (s < lo || s > hi) continue;
                                          sn->grad[i] += label ? -g / s : g / (T(1) - s);
                                      }
                                  });
}

template <typename T>
Tensor<T> gan_d_loss(const Tensor<T>& real_scores, const Tensor<T>& fake_scores) {
    return add(bce_sum(real_scores, 1), bce_sum(fake_scores, 0));
}

template <typename T>
Tensor<T> gan_g_loss(const Tensor<T>& fake_scores) {
    return bce_sum(fake_scores, 1);
}

template <typename T>
Tensor<T> cond_d_loss(const Tensor<T>& real_pair_scores, const Tensor<T>& fake_pair_scores) {
    return gan_d_loss(real_pair_scores, fake_pair_scores);
}

template <typename T>
Tensor<T> cond_g_loss(const Tensor<T>& fake_pair_scores) {
    return gan_g_loss(fake_pair_scores);
}

template <typename T>
Tensor<T> fcn_loss(const Tensor<T>& logits, const std::vector<std::int32_t>& labels) {
    return softmax_cross_entropy_pixels(logits, labels);
}

template <typename T>
Tensor<T> style_g_multitask_loss(const Tensor<T>& cond_g_term, const Tensor<T>& fcn_term) {
    return add(cond_g_term, fcn_term);
}

template <typename T>
Tensor<T> joint_structure_g_loss(const Tensor<T>& structure_g_term, const Tensor<T>& style_chain_term,
                                 double lambda) {
    return add(structure_g_term, scale(style_chain_term, static_cast<T>(lambda)));
}

#define STYLESTRUCT_INSTANTIATE_LOSSES(T)                                                      \
    template Tensor<T> bce_sum(const Tensor<T>&, int);                                         \
    template Tensor<T> gan_d_loss(const Tensor<T>&, const Tensor<T>&);                         \
    template Tensor<T> gan_g_loss(const Tensor<T>&);                                           \
    template Tensor<T> cond_d_loss(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> cond_g_loss(const Tensor<T>&);                                          \
    template Tensor<T> fcn_loss(const Tensor<T>&, const std::vector<std::int32_t>&);           \
    template Tensor<T> style_g_multitask_loss(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> joint_structure_g_loss(const Tensor<T>&, const Tensor<T>&, double);

STYLESTRUCT_INSTANTIATE_LOSSES(float)
STYLESTRUCT_INSTANTIATE_LOSSES(double)

}  // namespace stylestruct
