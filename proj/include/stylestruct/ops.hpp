#pragma once

#include <cstdint>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

enum class Activation { None, Relu, LeakyRelu, Tanh, Sigmoid };

const char* activation_name(Activation a);

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Running statistics for one batch-norm layer. Initialised to mean 0, var 1.
template <typename T>
struct BatchNormStats {
    std::vector<T> mean;
    std::vector<T> var;

    explicit BatchNormStats(Index channels = 0)
        : mean(static_cast<std::size_t>(channels), T(0)),
          var(static_cast<std::size_t>(channels), T(1)) {}
};

// Convolutions. Kernels follow the usual layouts: conv2d takes [K,C,kh,kw],
// conv_transpose2d takes [Cin,Cout,kh,kw] and is the adjoint of conv2d with the
// same kernel and stride. `bias` may be an undefined tensor.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride, int padding);

/// Fractionally-strided convolution; only exact 2x upsampling is accepted.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           int stride, int padding);

/// input [N,D] times weight [D,E] plus bias [E].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> activate(const Tensor<T>& input, Activation kind, double slope = kLeakySlope);

template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return activate(x, Activation::Relu); }
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope = kLeakySlope) {
    return activate(x, Activation::LeakyRelu, slope);
}
template <typename T>
Tensor<T> tanh(const Tensor<T>& x) { return activate(x, Activation::Tanh); }
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return activate(x, Activation::Sigmoid); }

/// Per-channel normalisation over N,H,W (rank 4) or N (rank 2).
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, bool training,
                     double momentum = kBatchNormMomentum, double eps = kBatchNormEps);

/// Softmax along the channel axis at every pixel of [N,C,H,W].
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits);

/// (1/(H*W)) * sum over samples and pixels of -log softmax(logits)[label].
/// Labels are 1-based class ids laid out [N,H,W].
template <typename T>
Tensor<T> softmax_cross_entropy_pixels(const Tensor<T>& logits, const std::vector<std::int32_t>& labels);

/// Bilinear resize, half-pixel centres (align_corners = false). Upsampling only.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& input, Index out_h, Index out_w);

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& input, int factor) {
    return resize_bilinear(input, input.dim(2) * factor, input.dim(3) * factor);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int kernel, int stride, int padding);

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

/// Rows [begin, end) of the leading axis.
template <typename T>
Tensor<T> batch_slice(const Tensor<T>& input, Index begin, Index end);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);

/// Output size of a strided window op.
inline Index conv_out_size(Index in, int kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

}  // namespace stylestruct
