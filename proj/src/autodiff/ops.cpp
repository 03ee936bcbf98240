#include "stylestruct/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "stylestruct/error.hpp"

namespace stylestruct {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

void require_rank(const Shape& s, std::size_t r, const char* op) {
    require(s.size() == r, std::string(op) + ": expected rank " + std::to_string(r) + ", got " +
                               shape_str(s));
}

// Unfolds every kernel window of a [C,H,W] image into a column of
// [C*kh*kw, Ho*Wo]. Out-of-image taps read zero.
template <typename T>
void im2col(const T* img, Index C, Index H, Index W, int kh, int kw, int stride, int pad,
            Index Ho, Index Wo, T* col) {
    for (Index c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                T* dst = col + ((c * kh + ki) * kw + kj) * Ho * Wo;
                for (Index oy = 0; oy < Ho; ++oy) {
                    const Index iy = oy * stride - pad + ki;
                    T* row = dst + oy * Wo;
                    if (iy < 0 || iy >= H) {
                        std::fill(row, row + Wo, T(0));
                        continue;
                    }
                    const T* src = img + (c * H + iy) * W;
                    for (Index ox = 0; ox < Wo; ++ox) {
                        const Index ix = ox * stride - pad + kj;
                        row[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
                    }
                }
            }
}

// Adjoint of im2col: scatters (accumulates) columns back into the image.
template <typename T>
void col2im(const T* col, Index C, Index H, Index W, int kh, int kw, int stride, int pad,
            Index Ho, Index Wo, T* img) {
    for (Index c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const T* src = col + ((c * kh + ki) * kw + kj) * Ho * Wo;
                for (Index oy = 0; oy < Ho; ++oy) {
                    const Index iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= H) continue;
                    T* dst = img + (c * H + iy) * W;
                    const T* row = src + oy * Wo;
                    for (Index ox = 0; ox < Wo; ++ox) {
                        const Index ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < W) dst[ix] += row[ox];
                    }
                }
            }
}

template <typename T>
bool needs_grad(const detail::Node<T>* n) {
    return n != nullptr && n->requires_grad;
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "lrelu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride, int padding) {
    require_rank(input.shape(), 4, "conv2d input");
    require_rank(kernel.shape(), 4, "conv2d kernel");
    const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const Index K = kernel.dim(0);
    const int kh = static_cast<int>(kernel.dim(2)), kw = static_cast<int>(kernel.dim(3));
    require(kernel.dim(1) == C, "conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                                    " input channels, input has " + std::to_string(C));
    require(stride > 0 && padding >= 0, "conv2d: bad stride/padding");
    require(H + 2 * padding >= kh && W + 2 * padding >= kw, "conv2d: kernel larger than padded input");
    if (bias.defined()) require(bias.size() == K, "conv2d: bias size mismatch");

    const Index Ho = conv_out_size(H, kh, stride, padding);
    const Index Wo = conv_out_size(W, kw, stride, padding);
    const Index ckk = C * kh * kw, hw = Ho * Wo;

    std::vector<T> out(static_cast<std::size_t>(N * K * hw));
    std::vector<T> col(static_cast<std::size_t>(ckk * hw));
    ConstMatMap<T> wmat(kernel.values().data(), K, ckk);
    const T* x = input.values().data();
    for (Index n = 0; n < N; ++n) {
        im2col(x + n * C * H * W, C, H, W, kh, kw, stride, padding, Ho, Wo, col.data());
        MatMap<T> o(out.data() + n * K * hw, K, hw);
        o.noalias() = wmat * ConstMatMap<T>(col.data(), ckk, hw);
        if (bias.defined()) {
            const T* b = bias.values().data();
            for (Index k = 0; k < K; ++k) o.row(k).array() += b[k];
        }
    }

    auto* xn = input.node();
    auto* wn = kernel.node();
    auto* bn = bias.defined() ? bias.node() : nullptr;
    return Tensor<T>::make_result(
        {N, K, Ho, Wo}, std::move(out), {input, kernel, bias}, "conv2d",
        [=](detail::Node<T>& o) {
            std::vector<T> buf(static_cast<std::size_t>(ckk * hw));
            ConstMatMap<T> wm(wn->value.data(), K, ckk);
            if (needs_grad(xn)) xn->ensure_grad();
            if (needs_grad(wn)) wn->ensure_grad();
            if (needs_grad(bn)) bn->ensure_grad();
            for (Index n = 0; n < N; ++n) {
                ConstMatMap<T> dy(o.grad.data() + n * K * hw, K, hw);
                if (needs_grad(wn)) {
                    im2col(xn->value.data() + n * C * H * W, C, H, W, kh, kw, stride, padding, Ho,
                           Wo, buf.data());
                    MatMap<T>(wn->grad.data(), K, ckk).noalias() +=
                        dy * ConstMatMap<T>(buf.data(), ckk, hw).transpose();
                }
                if (needs_grad(bn)) {
                    // Sequential sums keep the result independent of buffer alignment.
                    for (Index k = 0; k < K; ++k) {
                        T acc = 0;
                        for (Index i = 0; i < hw; ++i) acc += dy(k, i);
                        bn->grad[k] += acc;
                    }
                }
                if (needs_grad(xn)) {
                    MatMap<T>(buf.data(), ckk, hw).noalias() = wm.transpose() * dy;
                    col2im(buf.data(), C, H, W, kh, kw, stride, padding, Ho, Wo,
                           xn->grad.data() + n * C * H * W);
                }
            }
        });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           int stride, int padding) {
    require_rank(input.shape(), 4, "conv_transpose2d input");
    require_rank(kernel.shape(), 4, "conv_transpose2d kernel");
    const Index N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const Index Cout = kernel.dim(1);
    const int kh = static_cast<int>(kernel.dim(2)), kw = static_cast<int>(kernel.dim(3));
    require(kernel.dim(0) == Cin, "conv_transpose2d: kernel expects " +
                                      std::to_string(kernel.dim(0)) + " input channels, input has " +
                                      std::to_string(Cin));
    require(stride == 2, "conv_transpose2d: only stride 2 (2x upsampling) is supported");
    const Index Ho = (H - 1) * stride - 2 * padding + kh;
    const Index Wo = (W - 1) * stride - 2 * padding + kw;
    require(Ho == 2 * H && Wo == 2 * W,
            "conv_transpose2d: kernel " + std::to_string(kh) + " with padding " +
                std::to_string(padding) + " does not give exact 2x resolution");
    if (bias.defined()) require(bias.size() == Cout, "conv_transpose2d: bias size mismatch");

    const Index okk = Cout * kh * kw, hw = H * W, ohw = Ho * Wo;
    std::vector<T> out(static_cast<std::size_t>(N * Cout * ohw), T(0));
    std::vector<T> col(static_cast<std::size_t>(okk * hw));
    ConstMatMap<T> wmat(kernel.values().data(), Cin, okk);
    const T* x = input.values().data();
    for (Index n = 0; n < N; ++n) {
        MatMap<T>(col.data(), okk, hw).noalias() =
            wmat.transpose() * ConstMatMap<T>(x + n * Cin * hw, Cin, hw);
        T* o = out.data() + n * Cout * ohw;
        col2im(col.data(), Cout, Ho, Wo, kh, kw, stride, padding, H, W, o);
        if (bias.defined()) {
            const T* b = bias.values().data();
            for (Index c = 0; c < Cout; ++c)
                for (Index i = 0; i < ohw; ++i) o[c * ohw + i] += b[c];
        }
    }

    auto* xn = input.node();
    auto* wn = kernel.node();
    auto* bn = bias.defined() ? bias.node() : nullptr;
    return Tensor<T>::make_result(
        {N, Cout, Ho, Wo}, std::move(out), {input, kernel, bias}, "conv_transpose2d",
        [=](detail::Node<T>& o) {
            std::vector<T> buf(static_cast<std::size_t>(okk * hw));
            ConstMatMap<T> wm(wn->value.data(), Cin, okk);
            if (needs_grad(xn)) xn->ensure_grad();
            if (needs_grad(wn)) wn->ensure_grad();
            if (needs_grad(bn)) bn->ensure_grad();
            for (Index n = 0; n < N; ++n) {
                const T* dy = o.grad.data() + n * Cout * ohw;
                if (needs_grad(bn))
                    for (Index c = 0; c < Cout; ++c) {
                        T s = 0;
                        for (Index i = 0; i < ohw; ++i) s += dy[c * ohw + i];
                        bn->grad[c] += s;
                    }
                if (!needs_grad(xn) && !needs_grad(wn)) continue;
                im2col(dy, Cout, Ho, Wo, kh, kw, stride, padding, H, W, buf.data());
                ConstMatMap<T> g(buf.data(), okk, hw);
                if (needs_grad(xn))
                    MatMap<T>(xn->grad.data() + n * Cin * hw, Cin, hw).noalias() += wm * g;
                if (needs_grad(wn))
                    MatMap<T>(wn->grad.data(), Cin, okk).noalias() +=
                        ConstMatMap<T>(xn->value.data() + n * Cin * hw, Cin, hw) * g.transpose();
            }
        });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    require_rank(input.shape(), 2, "linear input");
    require_rank(weight.shape(), 2, "linear weight");
    const Index N = input.dim(0), D = input.dim(1), E = weight.dim(1);
    require(weight.dim(0) == D, "linear: input has " + std::to_string(D) + " features, weight " +
                                    shape_str(weight.shape()));
    if (bias.defined()) require(bias.size() == E, "linear: bias size mismatch");

    std::vector<T> out(static_cast<std::size_t>(N * E));
    MatMap<T> o(out.data(), N, E);
    o.noalias() = ConstMatMap<T>(input.values().data(), N, D) *
                  ConstMatMap<T>(weight.values().data(), D, E);
    if (bias.defined()) {
        const T* b = bias.values().data();
        for (Index i = 0; i < N; ++i)
            for (Index e = 0; e < E; ++e) o(i, e) += b[e];
    }

    auto* xn = input.node();
    auto* wn = weight.node();
    auto* bn = bias.defined() ? bias.node() : nullptr;
    return Tensor<T>::make_result(
        {N, E}, std::move(out), {input, weight, bias}, "linear", [=](detail::Node<T>& o) {
            ConstMatMap<T> dy(o.grad.data(), N, E);
            if (needs_grad(xn)) {
                xn->ensure_grad();
                MatMap<T>(xn->grad.data(), N, D).noalias() +=
                    dy * ConstMatMap<T>(wn->value.data(), D, E).transpose();
            }
            if (needs_grad(wn)) {
                wn->ensure_grad();
                MatMap<T>(wn->grad.data(), D, E).noalias() +=
                    ConstMatMap<T>(xn->value.data(), N, D).transpose() * dy;
            }
            if (needs_grad(bn)) {
                bn->ensure_grad();
                for (Index e = 0; e < E; ++e) {
                    T acc = 0;
                    for (Index i = 0; i < N; ++i) acc += dy(i, e);
                    bn->grad[e] += acc;
                }
            }
        });
}

template <typename T>
Tensor<T> activate(const Tensor<T>& input, Activation kind, double slope) {
    const auto x = input.values();
    std::vector<T> y(x.size());
    const T a = static_cast<T>(slope);
    switch (kind) {
        case Activation::None: std::copy(x.begin(), x.end(), y.begin()); break;
        case Activation::Relu:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
            break;
        case Activation::LeakyRelu:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : a * x[i];
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i] >= T(0)) {
                    y[i] = T(1) / (T(1) + std::exp(-x[i]));
                } else {
                    const T e = std::exp(x[i]);
                    y[i] = e / (T(1) + e);
                }
            }
            break;
    }

    auto* xn = input.node();
    return Tensor<T>::make_result(
        input.shape(), std::move(y), {input}, activation_name(kind), [=](detail::Node<T>& o) {
            xn->ensure_grad();
            const auto& dy = o.grad;
            const auto& xv = xn->value;
            const auto& yv = o.value;
            auto& dx = xn->grad;
            switch (kind) {
                case Activation::None:
                    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
                    break;
                case Activation::Relu:
                    for (std::size_t i = 0; i < dy.size(); ++i)
                        if (xv[i] > T(0)) dx[i] += dy[i];
                    break;
                case Activation::LeakyRelu:
                    for (std::size_t i = 0; i < dy.size(); ++i)
                        dx[i] += xv[i] > T(0) ? dy[i] : a * dy[i];
                    break;
                case Activation::Tanh:
                    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (T(1) - yv[i] * yv[i]);
                    break;
                case Activation::Sigmoid:
                    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * yv[i] * (T(1) - yv[i]);
                    break;
            }
        });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, bool training, double momentum, double eps) {
    require(input.rank() == 4 || input.rank() == 2, "batch_norm: expected rank 2 or 4, got " +
                                                        shape_str(input.shape()));
    const Index N = input.dim(0), C = input.dim(1);
    const Index HW = input.rank() == 4 ? input.dim(2) * input.dim(3) : 1;
    require(gamma.size() == C && beta.size() == C, "batch_norm: gamma/beta size mismatch");
    require(static_cast<Index>(stats.mean.size()) == C && static_cast<Index>(stats.var.size()) == C,
            "batch_norm: running stats size mismatch");
    const Index m = N * HW;
    if (training) require(m >= 2, "batch_norm: train mode needs N*H*W >= 2");

    const auto x = input.values();
    const T* g = gamma.values().data();
    const T* b = beta.values().data();
    std::vector<T> xhat(x.size()), y(x.size()), invstd(static_cast<std::size_t>(C));
    for (Index c = 0; c < C; ++c) {
        double mean, var;
        if (training) {
            double s = 0.0;
            for (Index n = 0; n < N; ++n)
                for (Index i = 0; i < HW; ++i) s += x[(n * C + c) * HW + i];
            mean = s / static_cast<double>(m);
            double ss = 0.0;
            for (Index n = 0; n < N; ++n)
                for (Index i = 0; i < HW; ++i) {
                    const double d = x[(n * C + c) * HW + i] - mean;
                    ss += d * d;
                }
            var = ss / static_cast<double>(m);
            const double unbiased = ss / static_cast<double>(m - 1);
            stats.mean[c] = static_cast<T>(momentum * stats.mean[c] + (1.0 - momentum) * mean);
            stats.var[c] = static_cast<T>(momentum * stats.var[c] + (1.0 - momentum) * unbiased);
        } else {
            mean = stats.mean[c];
            var = stats.var[c];
        }
        const T is = static_cast<T>(1.0 / std::sqrt(var + eps));
        invstd[c] = is;
        const T mu = static_cast<T>(mean);
        for (Index n = 0; n < N; ++n)
            for (Index i = 0; i < HW; ++i) {
                const Index k = (n * C + c) * HW + i;
                xhat[k] = (x[k] - mu) * is;
                y[k] = g[c] * xhat[k] + b[c];
            }
    }

    auto* xn = input.node();
    auto* gn = gamma.node();
    auto* bn = beta.node();
    return Tensor<T>::make_result(
        input.shape(), std::move(y), {input, gamma, beta}, "batch_norm",
        [=, xhat = std::move(xhat), invstd = std::move(invstd)](detail::Node<T>& o) {
            const auto& dy = o.grad;
            if (needs_grad(xn)) xn->ensure_grad();
            if (needs_grad(gn)) gn->ensure_grad();
            if (needs_grad(bn)) bn->ensure_grad();
            for (Index c = 0; c < C; ++c) {
                double sdy = 0.0, sdyx = 0.0;
                for (Index n = 0; n < N; ++n)
                    for (Index i = 0; i < HW; ++i) {
                        const Index k = (n * C + c) * HW + i;
                        sdy += dy[k];
                        sdyx += static_cast<double>(dy[k]) * xhat[k];
                    }
                if (needs_grad(gn)) gn->grad[c] += static_cast<T>(sdyx);
                if (needs_grad(bn)) bn->grad[c] += static_cast<T>(sdy);
                if (!needs_grad(xn)) continue;
                const T gc = gn->value[c];
                if (training) {
                    const T k1 = gc * invstd[c] / static_cast<T>(m);
                    const T mdy = static_cast<T>(sdy), mdyx = static_cast<T>(sdyx);
                    for (Index n = 0; n < N; ++n)
                        for (Index i = 0; i < HW; ++i) {
                            const Index k = (n * C + c) * HW + i;
                            xn->grad[k] += k1 * (static_cast<T>(m) * dy[k] - mdy - xhat[k] * mdyx);
                        }
                } else {
                    const T k1 = gc * invstd[c];
                    for (Index n = 0; n < N; ++n)
                        for (Index i = 0; i < HW; ++i) {
                            const Index k = (n * C + c) * HW + i;
                            xn->grad[k] += k1 * dy[k];
                        }
                }
            }
        });
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits) {
    require_rank(logits.shape(), 4, "softmax_channels");
    const Index N = logits.dim(0), C = logits.dim(1), HW = logits.dim(2) * logits.dim(3);
    const auto z = logits.values();
    std::vector<T> p(z.size());
    for (Index n = 0; n < N; ++n)
        for (Index i = 0; i < HW; ++i) {
            const Index base = n * C * HW + i;
            T mx = z[base];
            for (Index c = 1; c < C; ++c) mx = std::max(mx, z[base + c * HW]);
            T s = 0;
            for (Index c = 0; c < C; ++c) {
                p[base + c * HW] = std::exp(z[base + c * HW] - mx);
                s += p[base + c * HW];
            }
            for (Index c = 0; c < C; ++c) p[base + c * HW] /= s;
        }
    auto* zn = logits.node();
    return Tensor<T>::make_result(logits.shape(), std::move(p), {logits}, "softmax_channels",
                                  [=](detail::Node<T>& o) {
                                      zn->ensure_grad();
                                      for (Index n = 0; n < N; ++n)
                                          for (Index i = 0; i < HW; ++i) {
                                              const Index base = n * C * HW + i;
                                              T dot = 0;
                                              for (Index c = 0; c < C; ++c)
                                                  dot += o.value[base + c * HW] * o.grad[base + c * HW];
                                              for (Index c = 0; c < C; ++c) {
                                                  const Index k = base + c * HW;
                                                  zn->grad[k] += o.value[k] * (o.grad[k] - dot);
                                              }
                                          }
                                  });
}

template <typename T>
Tensor<T> softmax_cross_entropy_pixels(const Tensor<T>& logits,
                                       const std::vector<std::int32_t>& labels) {
    require_rank(logits.shape(), 4, "softmax_cross_entropy_pixels");
    const Index N = logits.dim(0), C = logits.dim(1), HW = logits.dim(2) * logits.dim(3);
    if (static_cast<Index>(labels.size()) != N * HW)
        throw ConfigError("softmax_cross_entropy_pixels: " + std::to_string(labels.size()) +
                          " labels for logits " + shape_str(logits.shape()));
    for (std::int32_t l : labels)
        if (l < 1 || l > C)
            throw DataError("class label " + std::to_string(l) + " outside [1," + std::to_string(C) +
                            "]");

    const auto z = logits.values();
    std::vector<T> p(z.size());
    double total = 0.0;
    for (Index n = 0; n < N; ++n)
        for (Index i = 0; i < HW; ++i) {
            const Index base = n * C * HW + i;
            T mx = z[base];
            for (Index c = 1; c < C; ++c) mx = std::max(mx, z[base + c * HW]);
            double s = 0.0;
            for (Index c = 0; c < C; ++c) {
                const T e = std::exp(z[base + c * HW] - mx);
                p[base + c * HW] = e;
                s += e;
            }
            for (Index c = 0; c < C; ++c) p[base + c * HW] = static_cast<T>(p[base + c * HW] / s);
            const Index lbl = labels[static_cast<std::size_t>(n * HW + i)] - 1;
            total += std::log(s) - static_cast<double>(z[base + lbl * HW] - mx);
        }
    const double inv_hw = 1.0 / static_cast<double>(HW);
    auto* zn = logits.node();
    return Tensor<T>::make_result(
        {1}, {static_cast<T>(total * inv_hw)}, {logits}, "softmax_xent",
        [=, p = std::move(p)](detail::Node<T>& o) {
            zn->ensure_grad();
            const T g = static_cast<T>(o.grad[0] * inv_hw);
            for (Index n = 0; n < N; ++n)
                for (Index i = 0; i < HW; ++i) {
                    const Index base = n * C * HW + i;
                    const Index lbl = labels[static_cast<std::size_t>(n * HW + i)] - 1;
                    for (Index c = 0; c < C; ++c) {
                        const Index k = base + c * HW;
                        zn->grad[k] += g * (p[k] - (c == lbl ? T(1) : T(0)));
                    }
                }
        });
}

namespace {

struct Lerp {
    Index i0, i1;
    double w1;
};

std::vector<Lerp> bilinear_taps(Index in, Index out) {
    std::vector<Lerp> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (Index o = 0; o < out; ++o) {
        double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        const auto i0 = std::min(static_cast<Index>(src), in - 1);
        const Index i1 = std::min(i0 + 1, in - 1);
        taps[static_cast<std::size_t>(o)] = {i0, i1, src - static_cast<double>(i0)};
    }
    return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& input, Index out_h, Index out_w) {
    require_rank(input.shape(), 4, "resize_bilinear");
    const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    require(out_h >= H && out_w >= W, "resize_bilinear: target " + std::to_string(out_h) + "x" +
                                          std::to_string(out_w) + " smaller than input " +
                                          std::to_string(H) + "x" + std::to_string(W) +
                                          " (downsampling not supported)");
    const auto ty = bilinear_taps(H, out_h);
    const auto tx = bilinear_taps(W, out_w);
    const auto x = input.values();
    std::vector<T> y(static_cast<std::size_t>(N * C * out_h * out_w));
    for (Index p = 0; p < N * C; ++p) {
        const T* src = x.data() + p * H * W;
        T* dst = y.data() + p * out_h * out_w;
        for (Index oy = 0; oy < out_h; ++oy) {
            const auto& a = ty[static_cast<std::size_t>(oy)];
            const T wy1 = static_cast<T>(a.w1), wy0 = T(1) - wy1;
            for (Index ox = 0; ox < out_w; ++ox) {
                const auto& b = tx[static_cast<std::size_t>(ox)];
                const T wx1 = static_cast<T>(b.w1), wx0 = T(1) - wx1;
                dst[oy * out_w + ox] = wy0 * (wx0 * src[a.i0 * W + b.i0] + wx1 * src[a.i0 * W + b.i1]) +
                                       wy1 * (wx0 * src[a.i1 * W + b.i0] + wx1 * src[a.i1 * W + b.i1]);
            }
        }
    }
    auto* xn = input.node();
    return Tensor<T>::make_result(
        {N, C, out_h, out_w}, std::move(y), {input}, "resize_bilinear", [=](detail::Node<T>& o) {
            xn->ensure_grad();
            for (Index p = 0; p < N * C; ++p) {
                const T* dy = o.grad.data() + p * out_h * out_w;
                T* dx = xn->grad.data() + p * H * W;
                for (Index oy = 0; oy < out_h; ++oy) {
                    const auto& a = ty[static_cast<std::size_t>(oy)];
                    const T wy1 = static_cast<T>(a.w1), wy0 = T(1) - wy1;
                    for (Index ox = 0; ox < out_w; ++ox) {
                        const auto& b = tx[static_cast<std::size_t>(ox)];
                        const T wx1 = static_cast<T>(b.w1), wx0 = T(1) - wx1;
                        const T g = dy[oy * out_w + ox];
                        dx[a.i0 * W + b.i0] += g * wy0 * wx0;
                        dx[a.i0 * W + b.i1] += g * wy0 * wx1;
                        dx[a.i1 * W + b.i0] += g * wy1 * wx0;
                        dx[a.i1 * W + b.i1] += g * wy1 * wx1;
                    }
                }
            }
        });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank(a.shape(), 4, "concat_channels");
    require_rank(b.shape(), 4, "concat_channels");
    const Index N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
    require(b.dim(0) == N && b.dim(2) == H && b.dim(3) == W,
            "concat_channels: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const Index hw = H * W;
    std::vector<T> y(static_cast<std::size_t>(N * (Ca + Cb) * hw));
    for (Index n = 0; n < N; ++n) {
        std::copy_n(a.values().data() + n * Ca * hw, Ca * hw, y.data() + n * (Ca + Cb) * hw);
        std::copy_n(b.values().data() + n * Cb * hw, Cb * hw, y.data() + (n * (Ca + Cb) + Ca) * hw);
    }
    auto* an = a.node();
    auto* bn = b.node();
    return Tensor<T>::make_result({N, Ca + Cb, H, W}, std::move(y), {a, b}, "concat_channels",
                                  [=](detail::Node<T>& o) {
                                      for (Index n = 0; n < N; ++n) {
                                          const T* g = o.grad.data() + n * (Ca + Cb) * hw;
                                          if (needs_grad(an)) {
                                              an->ensure_grad();
                                              T* d = an->grad.data() + n * Ca * hw;
                                              for (Index i = 0; i < Ca * hw; ++i) d[i] += g[i];
                                          }
                                          if (needs_grad(bn)) {
                                              bn->ensure_grad();
                                              T* d = bn->grad.data() + n * Cb * hw;
                                              for (Index i = 0; i < Cb * hw; ++i) d[i] += g[Ca * hw + i];
                                          }
                                      }
                                  });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int kernel, int stride, int padding) {
    require_rank(input.shape(), 4, "max_pool2d");
    require(padding < kernel, "max_pool2d: padding must be smaller than the window");
    const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const Index Ho = conv_out_size(H, kernel, stride, padding);
    const Index Wo = conv_out_size(W, kernel, stride, padding);
    require(Ho > 0 && Wo > 0, "max_pool2d: window larger than input");
    const auto x = input.values();
    std::vector<T> y(static_cast<std::size_t>(N * C * Ho * Wo));
    std::vector<Index> arg(y.size());
    for (Index p = 0; p < N * C; ++p)
        for (Index oy = 0; oy < Ho; ++oy)
            for (Index ox = 0; ox < Wo; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                Index where = -1;
                for (int ki = 0; ki < kernel; ++ki) {
                    const Index iy = oy * stride - padding + ki;
                    if (iy < 0 || iy >= H) continue;
                    for (int kj = 0; kj < kernel; ++kj) {
                        const Index ix = ox * stride - padding + kj;
                        if (ix < 0 || ix >= W) continue;
                        const Index k = (p * H + iy) * W + ix;
                        if (where < 0 || x[k] > best) {
                            best = x[k];
                            where = k;
                        }
                    }
                }
                const Index o = (p * Ho + oy) * Wo + ox;
                y[o] = best;
                arg[o] = where;
            }
    auto* xn = input.node();
    return Tensor<T>::make_result({N, C, Ho, Wo}, std::move(y), {input}, "max_pool2d",
                                  [=, arg = std::move(arg)](detail::Node<T>& o) {
                                      xn->ensure_grad();
                                      for (std::size_t i = 0; i < arg.size(); ++i)
                                          xn->grad[arg[i]] += o.grad[i];
                                  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
    require(numel(shape) == input.size(),
            "reshape: " + shape_str(input.shape()) + " -> " + shape_str(shape));
    std::vector<T> v(input.values().begin(), input.values().end());
    auto* xn = input.node();
    return Tensor<T>::make_result(std::move(shape), std::move(v), {input}, "reshape",
                                  [=](detail::Node<T>& o) {
                                      xn->ensure_grad();
                                      for (std::size_t i = 0; i < o.grad.size(); ++i)
                                          xn->grad[i] += o.grad[i];
                                  });
}

template <typename T>
Tensor<T> batch_slice(const Tensor<T>& input, Index begin, Index end) {
    const Index N = input.dim(0);
    require(0 <= begin && begin <= end && end <= N, "batch_slice: bad range");
    const Index row = N > 0 ? input.size() / N : 0;
    Shape shape = input.shape();
    shape[0] = end - begin;
    std::vector<T> v(input.values().begin() + begin * row, input.values().begin() + end * row);
    auto* xn = input.node();
    return Tensor<T>::make_result(std::move(shape), std::move(v), {input}, "batch_slice",
                                  [=](detail::Node<T>& o) {
                                      xn->ensure_grad();
                                      for (std::size_t i = 0; i < o.grad.size(); ++i)
                                          xn->grad[static_cast<std::size_t>(begin * row) + i] += o.grad[i];
                                  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape() == b.shape(), "add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> y(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.values()[i];
    auto* an = a.node();
    auto* bn = b.node();
    return Tensor<T>::make_result(a.shape(), std::move(y), {a, b}, "add", [=](detail::Node<T>& o) {
        for (auto* n : {an, bn}) {
            if (!needs_grad(n)) continue;
            n->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) n->grad[i] += o.grad[i];
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape() == b.shape(), "mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> y(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.values()[i];
    auto* an = a.node();
    auto* bn = b.node();
    return Tensor<T>::make_result(a.shape(), std::move(y), {a, b}, "mul", [=](detail::Node<T>& o) {
        if (needs_grad(an)) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->value[i];
        }
        if (needs_grad(bn)) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->value[i];
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    std::vector<T> y(a.values().begin(), a.values().end());
    for (auto& v : y) v *= factor;
    auto* an = a.node();
    return Tensor<T>::make_result(a.shape(), std::move(y), {a}, "scale", [=](detail::Node<T>& o) {
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += factor * o.grad[i];
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    double s = 0.0;
    for (T v : a.values()) s += v;
    auto* an = a.node();
    return Tensor<T>::make_result({1}, {static_cast<T>(s)}, {a}, "sum", [=](detail::Node<T>& o) {
        an->ensure_grad();
        for (auto& g : an->grad) g += o.grad[0];
    });
}

#define STYLESTRUCT_INSTANTIATE_OPS(T)                                                            \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);    \
    template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, \
                                        int);                                                     \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
    template Tensor<T> activate(const Tensor<T>&, Activation, double);                            \
    template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                  BatchNormStats<T>&, bool, double, double);                      \
    template Tensor<T> softmax_channels(const Tensor<T>&);                                        \
    template Tensor<T> softmax_cross_entropy_pixels(const Tensor<T>&,                             \
                                                    const std::vector<std::int32_t>&);            \
    template Tensor<T> resize_bilinear(const Tensor<T>&, Index, Index);                           \
    template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                       \
    template Tensor<T> max_pool2d(const Tensor<T>&, int, int, int);                               \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                          \
    template Tensor<T> batch_slice(const Tensor<T>&, Index, Index);                               \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                   \
    template Tensor<T> scale(const Tensor<T>&, T);                                                \
    template Tensor<T> sum(const Tensor<T>&);

STYLESTRUCT_INSTANTIATE_OPS(float)
STYLESTRUCT_INSTANTIATE_OPS(double)

}  // namespace stylestruct
