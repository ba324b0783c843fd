#include "csi4/training/adam.hpp"

#include <cmath>

#include "csi4/common/errors.hpp"

namespace csi4::train {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ContractError("Adam eps must be positive");
}

void adam_step(AdamState& state, models::ModelParams& params, const models::GradientMap& grads,
               const AdamConfig& cfg) {
  // Check everything before touching any state.
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    const auto it = grads.find(e.name);
    if (it == grads.end()) throw ContractError("no gradient for parameter '" + e.name + "'");
    if (it->second.shape() != e.value.shape()) {
      throw DimensionError("gradient for '" + e.name + "' has shape " +
                           ad::to_string(it->second.shape()) + ", parameter is " +
                           ad::to_string(e.value.shape()));
    }
  }
  const std::uint64_t t = ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const ad::Tensor& g = grads.find(e.name)->second;
    auto [mit, m_new] = state.m.try_emplace(e.name, e.value.shape());
    auto [vit, v_new] = state.v.try_emplace(e.name, e.value.shape());
    auto p = e.value.data();
    auto m = mit->second.data();
    auto v = vit->second.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.eps);
      p[i] = static_cast<float>(double(p[i]) - update);
    }
  }
}

}  // namespace csi4::train
