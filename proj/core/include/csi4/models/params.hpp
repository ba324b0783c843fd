#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "csi4/autodiff/graph.hpp"
#include "csi4/autodiff/layers.hpp"

namespace csi4::models {

struct NamedTensor {
  std::string name;
  ad::Tensor value;
  bool trainable = true;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered named parameters of one network. Order is fixed by the network
// spec, which keeps checkpoints compatible across runs. Non-trainable
// entries are buffers (batchnorm running statistics).
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::vector<NamedTensor> entries, std::uint64_t init_seed)
      : entries_(std::move(entries)), init_seed_(init_seed) {}

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const ad::Tensor& get(std::string_view name) const;
  ad::Tensor& get(std::string_view name);
  bool contains(std::string_view name) const;

  // Number of trainable scalars.
  std::size_t parameter_count() const;
  std::uint64_t init_seed() const { return init_seed_; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::vector<NamedTensor> entries_;
  std::uint64_t init_seed_ = 0;
};

using GradientMap = std::map<std::string, ad::Tensor, std::less<>>;

// Running-statistic buffers produced by a train-mode forward pass.
using BufferUpdates = std::map<std::string, ad::Tensor, std::less<>>;

void apply_buffer_updates(ModelParams& params, const BufferUpdates& updates);

// A ModelParams placed on a graph. Trainable entries become leaves that
// require gradients (when `trainable` is set); buffers are constants.
class BoundParams {
 public:
  BoundParams(ad::Graph& graph, const ModelParams& params, bool trainable);

  ad::Var operator[](std::string_view name) const;
  const ModelParams& params() const { return *params_; }
  ad::Graph& graph() const { return *graph_; }

  // d(loss)/d(param) for every trainable entry. Entries not reachable from
  // the loss get zero tensors.
  GradientMap backward(const ad::Var& loss) const;

 private:
  ad::Graph* graph_;
  const ModelParams* params_;
  std::vector<ad::Var> vars_;
};

// A layer in a network with a unique name; its parameters are called
// "<name>.<param>".
struct NamedLayer {
  std::string name;
  ad::LayerSpec spec;
};

// Runtime options shared by the network forward passes.
struct ForwardContext {
  ad::Mode mode = ad::Mode::eval;
  Rng* rng = nullptr;
  BufferUpdates* updates = nullptr;
};

// Runs `layers` in order, starting from `x`.
ad::Var run_layers(const std::vector<NamedLayer>& layers, const BoundParams& params, ad::Var x,
                   const ForwardContext& ctx);

enum class InitScheme {
  // Weights ~ N(0, 0.02^2), biases zero, embeddings identity.
  gan_normal,
  // Weights ~ N(0, 2 / fan_in), biases zero.
  kaiming_normal,
};

// Creates parameters for `layers` in canonical order. Each tensor draws
// from its own stream keyed by (seed, parameter name).
std::vector<NamedTensor> init_layers(const std::vector<NamedLayer>& layers, std::uint64_t seed,
                                     InitScheme scheme);

}  // namespace csi4::models
