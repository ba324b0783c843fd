#pragma once

#include <cstdint>

#include "csi4/models/params.hpp"

namespace csi4::train {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;

  void validate() const;
};

// First/second moment estimates keyed by parameter name. `step` counts
// completed updates.
struct AdamState {
  models::GradientMap m;
  models::GradientMap v;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update of every trainable entry. A trainable
// entry without a gradient is a ContractError.
void adam_step(AdamState& state, models::ModelParams& params, const models::GradientMap& grads,
               const AdamConfig& cfg);

}  // namespace csi4::train
