#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rvf/common.hpp"

namespace rvf {

namespace detail {

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One recorded operation (or a leaf). Values are float32; gradients too.
// Reductions inside ops accumulate in double before storing back.
struct TensorNode {
    Shape shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;  // allocated on first accumulation

    // Tape linkage: empty for leaves. backward_fn reads this->grad and
    // accumulates into the parents' grads.
    std::vector<NodePtr> parents;
    std::function<void(TensorNode&)> backward_fn;
    const char* op = "leaf";

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
    }
    void accumulate(const std::vector<float>& g);
};

}  // namespace detail

// Dynamic-graph gradient recording is on by default; NoGradGuard disables it
// for the current thread (inference, metrics, probes).
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Value-semantic handle to an immutable rank<=4 float32 tensor. Copies share
// storage; forward ops never mutate existing nodes, so handles are safe to
// move across threads. Leaf data may be mutated in place (parameter updates)
// only between recorded graphs.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& s, bool requires_grad = false);
    static Tensor full(const Shape& s, float v, bool requires_grad = false);
    static Tensor from_data(const Shape& s, std::vector<float> values, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int extent(int axis) const { return node_->shape[static_cast<std::size_t>(axis)]; }
    std::int64_t numel() const { return node_->numel(); }

    const std::vector<float>& data() const { return node_->data; }
    // In-place access for leaves (init, optimizer steps). Must not be used on
    // tensors that participate in a live recorded graph.
    std::vector<float>& leaf_data();

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg);
    const std::vector<float>& grad() const;
    void zero_grad();

    float item() const;          // scalar readout (numel == 1)
    double item_f64() const { return static_cast<double>(item()); }

    // Reverse-mode pass from a scalar loss. Visits each recorded node exactly
    // once in reverse topological order. Throws on non-scalar input.
    void backward() const;

    const char* op_name() const { return node_->op; }
    detail::NodePtr node() const { return node_; }
    static Tensor wrap(detail::NodePtr n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

private:
    detail::NodePtr node_;
};

// Collects op names of the recorded graph below `t` in topological order;
// used to compare graph structure between two builds of the same model.
std::vector<std::string> graph_op_sequence(const Tensor& t);

// All values finite? (Forward ops on finite inputs must keep this true.)
bool all_finite(const Tensor& t);

}  // namespace rvf
