#include "csi4/autodiff/graph.hpp"

#include <optional>
#include <string>

#include "csi4/autodiff/ops.hpp"
#include "csi4/common/errors.hpp"

namespace csi4::ad {

const Tensor& Var::value() const { return graph_->value(id_); }

bool Var::requires_grad() const { return graph_->requires_grad(id_); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, {}, requires_grad, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward,
                  bool second_order_ok) {
  Node node;
  node.value = std::move(value);
  bool needs = false;
  for (const auto& in : inputs) {
    if (&in.graph() != this) throw ContractError("operands belong to different graphs");
    needs = needs || in.requires_grad();
  }
  if (recording_ && needs) {
    node.requires_grad = true;
    node.backward = std::move(backward);
    node.second_order_ok = second_order_ok;
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) node.inputs.push_back(in.id());
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::vector<Var> Graph::gradients(const Var& output, std::span<const Var> wrt, bool create_graph) {
  if (&output.graph() != this) throw ContractError("output belongs to a different graph");
  if (output.value().size() != 1) {
    throw ContractError("backward requires a scalar output, got shape " +
                        to_string(output.shape()));
  }
  if (create_graph && order_ != Order::second) {
    throw CapabilityError("differentiable gradients need a second-order graph");
  }

  const auto last = static_cast<std::size_t>(output.id());
  std::vector<std::optional<Var>> grads(last + 1);
  struct RecordingScope {
    bool& flag;
    bool previous;
    ~RecordingScope() { flag = previous; }
  } scope{recording_, recording_};
  recording_ = create_graph;

  grads[last] = constant(Tensor(output.shape(), 1.0f));
  for (std::size_t i = last + 1; i-- > 0;) {
    if (!grads[i]) continue;
    // Copy what we need: the deque keeps references valid, but the backward
    // closure may append nodes.
    const Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward) continue;
    if (create_graph && !node.second_order_ok) {
      throw CapabilityError("operation on the path does not support second-order gradients");
    }
    const std::vector<int> inputs = node.inputs;
    std::vector<Var> in_grads = node.backward(Var(this, static_cast<int>(i)), *grads[i]);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto j = static_cast<std::size_t>(inputs[k]);
      if (k >= in_grads.size() || !in_grads[k].valid()) continue;
      if (!nodes_[j].requires_grad) continue;
      grads[j] = grads[j] ? add(*grads[j], in_grads[k]) : in_grads[k];
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    const auto j = static_cast<std::size_t>(w.id());
    if (j <= last && grads[j]) {
      result.push_back(*grads[j]);
    } else {
      result.push_back(constant(Tensor(w.shape(), 0.0f)));
    }
  }
  return result;
}

Var Graph::input_gradient(const Var& scalar_out, const Var& wrt_input) {
  if (order_ != Order::second) {
    throw CapabilityError("input_gradient needs a second-order graph");
  }
  const Var wrt[] = {wrt_input};
  return gradients(scalar_out, wrt, /*create_graph=*/true).front();
}

}  // namespace csi4::ad
