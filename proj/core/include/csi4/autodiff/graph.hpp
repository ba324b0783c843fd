#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "csi4/autodiff/tensor.hpp"

namespace csi4::ad {

// Differentiability order of a graph. A second-order graph can record the
// backward pass itself, so scalar functions of gradients admit backward().
enum class Order { first, second };

class Graph;

// Handle to a node on a Graph. Cheap to copy; valid as long as the graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Maps (output node, gradient w.r.t. output) to gradients w.r.t. each input,
// in input order. An invalid Var means "no gradient for this input".
using BackwardFn = std::function<std::vector<Var>(const Var& out, const Var& grad_out)>;

// Append-only tape. Nodes only reference earlier nodes, so reverse id order is
// a valid topological order for backpropagation.
//
// A Graph and its Vars are confined to one thread. The graph is neither
// copyable nor movable because Vars hold a pointer to it.
class Graph {
 public:
  explicit Graph(Order order = Order::first) : order_(order) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Order order() const { return order_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad = true);

  // Appends an operation result. The backward rule is kept only when
  // recording is on and at least one input requires a gradient.
  // `second_order_ok` is false for fused kernels whose backward rule is not
  // itself built from differentiable ops.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward,
             bool second_order_ok = true);

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  // d(output)/d(w) for each w in `wrt`. `output` must hold exactly one value.
  // Unreachable entries get zero tensors. With create_graph the backward pass
  // is recorded, which requires a second-order graph.
  std::vector<Var> gradients(const Var& output, std::span<const Var> wrt, bool create_graph);

  // Differentiable gradient of a scalar w.r.t. an input tensor.
  Var input_gradient(const Var& scalar_out, const Var& wrt_input);

 private:
  struct Node {
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool second_order_ok = true;
  };
  // deque: references to node values stay valid while ops append.
  std::deque<Node> nodes_;
  Order order_;
  bool recording_ = true;
};

// Disables recording for its lifetime (inference / sampling passes).
class NoGradGuard {
 public:
  explicit NoGradGuard(Graph& g) : graph_(g), previous_(g.recording()) { g.set_recording(false); }
  ~NoGradGuard() { graph_.set_recording(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Graph& graph_;
  bool previous_;
};

}  // namespace csi4::ad
