#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stylestruct {

using Index = std::int64_t;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One vertex of the reverse-mode graph. The backward closure is owned by the
// node it writes gradients *from*; it holds shared references to the parents
// it writes gradients *into*.
template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty unless requires_grad
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

}  // namespace detail

/// Shared handle to an n-dimensional row-major array and its gradient.
///
/// Copies alias the same storage, like a framework tensor. Use clone() or
/// detach() for an independent copy.
template <typename T>
class Tensor {
public:
    using Node = detail::Node<T>;

    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

    static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    Index dim(int axis) const;
    int rank() const { return static_cast<int>(node_->shape.size()); }
    Index size() const { return static_cast<Index>(node_->value.size()); }

    std::span<const T> values() const { return node_->value; }
    std::span<T> values() { return node_->value; }
    T item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on);

    /// Empty span when no gradient has been accumulated.
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad();
    void zero_grad();

    /// Reverse pass from a single-element tensor.
    void backward() const;

    /// New leaf holding a copy of the values, cut from the graph.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

    /// Builds an op output. `backward` runs only if some parent requires grad.
    static Tensor make_result(Shape shape, std::vector<T> values,
                              std::vector<Tensor> parents, const char* op,
                              std::function<void(Node&)> backward);

private:
    std::shared_ptr<Node> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

/// Element-type conversion; the result is a fresh leaf.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t, bool requires_grad = false) {
    std::vector<To> v(t.values().begin(), t.values().end());
    return Tensor<To>(t.shape(), std::move(v), requires_grad);
}

}  // namespace stylestruct
