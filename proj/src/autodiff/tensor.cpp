#include "stylestruct/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "stylestruct/error.hpp"

namespace stylestruct {

Index numel(const Shape& shape) {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) : node_(std::make_shared<Node>()) {
    for (Index d : shape)
        if (d < 0) throw ConfigError("negative extent in shape " + shape_str(shape));
    node_->value.assign(static_cast<std::size_t>(numel(shape)), T(0));
    node_->shape = std::move(shape);
    node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
    if (numel(shape) != static_cast<Index>(values.size()))
        throw ConfigError("shape " + shape_str(shape) + " does not match " +
                          std::to_string(values.size()) + " values");
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

template <typename T>
Index Tensor<T>::dim(int axis) const {
    const int r = rank();
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r) throw ConfigError("axis out of range for " + shape_str(shape()));
    return node_->shape[static_cast<std::size_t>(axis)];
}

template <typename T>
T Tensor<T>::item() const {
    if (node_->value.size() != 1)
        throw ConfigError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (!on) node_->grad.clear();
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
    if (node_->value.size() != 1)
        throw ConfigError("backward() needs a single-element tensor, got " + shape_str(shape()));
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order without recursion
    // depth limits on long chains.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return Tensor(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> values, std::vector<Tensor> parents,
                                 const char* op, std::function<void(Node&)> backward) {
    Tensor out(std::move(shape), std::move(values), false);
    out.node_->op = op;
    bool any = false;
    for (const auto& p : parents) any = any || (p.defined() && p.requires_grad());
    if (any) {
        out.node_->requires_grad = true;
        for (auto& p : parents)
            if (p.defined()) out.node_->parents.push_back(p.node_);
        out.node_->backward_fn = std::move(backward);
    }
    return out;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace stylestruct
