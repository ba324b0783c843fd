#include "csi4/models/params.hpp"

#include <algorithm>
#include <cmath>

#include "csi4/common/errors.hpp"
#include "csi4/common/rng.hpp"

namespace csi4::models {

const ad::Tensor& ModelParams::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

ad::Tensor& ModelParams::get(std::string_view name) {
  return const_cast<ad::Tensor&>(std::as_const(*this).get(name));
}

bool ModelParams::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [name](const NamedTensor& e) { return e.name == name; });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.value.size();
  }
  return n;
}

void apply_buffer_updates(ModelParams& params, const BufferUpdates& updates) {
  for (const auto& [name, value] : updates) params.get(name) = value;
}

BoundParams::BoundParams(ad::Graph& graph, const ModelParams& params, bool trainable)
    : graph_(&graph), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& e : params.entries()) {
    vars_.push_back(e.trainable && trainable ? graph.leaf(e.value) : graph.constant(e.value));
  }
}

ad::Var BoundParams::operator[](std::string_view name) const {
  const auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return vars_[i];
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

GradientMap BoundParams::backward(const ad::Var& loss) const {
  std::vector<ad::Var> wrt;
  std::vector<std::size_t> slots;
  const auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].trainable) continue;
    wrt.push_back(vars_[i]);
    slots.push_back(i);
  }
  const auto grads = graph_->gradients(loss, wrt, false);
  GradientMap out;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    out.emplace(entries[slots[k]].name, grads[k].value());
  }
  return out;
}

ad::Var run_layers(const std::vector<NamedLayer>& layers, const BoundParams& params, ad::Var x,
                   const ForwardContext& ctx) {
  for (const auto& layer : layers) {
    std::vector<ad::Var> pv;
    const auto shapes = layer.spec.param_shapes();
    pv.reserve(shapes.size());
    for (const auto& s : shapes) pv.push_back(params[layer.name + "." + s.name]);
    std::optional<ad::BatchNormUpdate> bn;
    ad::LayerContext lc{ctx.mode, ctx.rng, {}, &bn};
    x = ad::layer_forward(layer.spec, pv, x, lc);
    if (bn && ctx.updates != nullptr) {
      (*ctx.updates)[layer.name + ".running_mean"] = std::move(bn->running_mean);
      (*ctx.updates)[layer.name + ".running_var"] = std::move(bn->running_var);
    }
  }
  return x;
}

std::vector<NamedTensor> init_layers(const std::vector<NamedLayer>& layers, std::uint64_t seed,
                                     InitScheme scheme) {
  std::vector<NamedTensor> out;
  for (const auto& layer : layers) {
    layer.spec.validate();
    for (const auto& shape : layer.spec.param_shapes()) {
      const std::string name = layer.name + "." + shape.name;
      ad::Tensor t(shape.shape);
      const bool is_weight = shape.name == "weight";
      if (layer.spec.kind == ad::LayerKind::embedding) {
        // Identity start: each label begins as its exact one-hot code.
        const std::size_t rows = shape.shape[0], cols = shape.shape[1];
        for (std::size_t r = 0; r < std::min(rows, cols); ++r) t.at(r, r) = 1.0f;
      } else if (is_weight) {
        Rng rng(seed, "init/" + name);
        float sigma = 0.02f;
        if (scheme == InitScheme::kaiming_normal) {
          sigma = std::sqrt(2.0f / static_cast<float>(shape.shape[0]));
        }
        for (auto& v : t.data()) v = sigma * rng.normal();
      } else if (shape.name == "gamma" || shape.name == "running_var") {
        std::fill(t.data().begin(), t.data().end(), 1.0f);
      }
      out.push_back(NamedTensor{name, std::move(t), shape.trainable});
    }
  }
  return out;
}

}  // namespace csi4::models
