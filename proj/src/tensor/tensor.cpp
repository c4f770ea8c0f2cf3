#include "rvf/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rvf {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

void TensorNode::accumulate(const std::vector<float>& g) {
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

namespace {
thread_local bool g_grad_enabled = true;

void validate_shape(const Shape& s) {
    if (s.size() > 4) throw ShapeError("tensor rank > 4: " + shape_str(s));
    for (int d : s)
        if (d <= 0) throw ShapeError("non-positive extent in shape " + shape_str(s));
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
    validate_shape(s);
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = s;
    n->data.assign(static_cast<std::size_t>(numel_of(s)), 0.0f);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::full(const Shape& s, float v, bool requires_grad) {
    Tensor t = zeros(s, requires_grad);
    auto& d = t.node_->data;
    std::fill(d.begin(), d.end(), v);
    return t;
}

Tensor Tensor::from_data(const Shape& s, std::vector<float> values, bool requires_grad) {
    validate_shape(s);
    if (static_cast<std::int64_t>(values.size()) != numel_of(s))
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(s));
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = s;
    n->data = std::move(values);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

std::vector<float>& Tensor::leaf_data() { return node_->data; }

void Tensor::set_requires_grad(bool rg) { node_->requires_grad = rg; }

const std::vector<float>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

float Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->data[0];
}

namespace {

// Iterative post-order DFS over parent links; each node appears once.
std::vector<detail::TensorNode*> topo_order(detail::TensorNode* root) {
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> seen;
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            detail::TensorNode* p = node->parents[idx].get();
            ++idx;
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

void Tensor::backward() const {
    if (numel() != 1)
        throw ShapeError("backward() requires a scalar loss, got " + shape_str(shape()));
    if (!node_->requires_grad) return;
    auto order = topo_order(node_.get());
    node_->ensure_grad();
    node_->grad[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorNode* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

std::vector<std::string> graph_op_sequence(const Tensor& t) {
    auto order = topo_order(t.node().get());
    std::vector<std::string> ops;
    ops.reserve(order.size());
    for (auto* n : order)
        if (!n->parents.empty()) ops.emplace_back(n->op);
    return ops;
}

bool all_finite(const Tensor& t) {
    for (float v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace rvf
