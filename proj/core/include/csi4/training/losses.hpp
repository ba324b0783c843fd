#pragma once

#include <functional>

#include "csi4/autodiff/graph.hpp"
#include "csi4/autodiff/ops.hpp"

namespace csi4::train {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr float kProbClamp = 1e-7f;
// Added under the square root of the per-sample gradient norm.
inline constexpr float kNormEps = 1e-12f;

struct BceLosses {
  ad::Var d_loss;
  ad::Var g_loss;
};

// d_loss = -mean(log d_real) - mean(log(1 - d_fake)).
// g_loss = -mean(log d_fake), or mean(log(1 - d_fake)) when `saturating`.
// NaN in either input raises NumericError.
BceLosses bce_gan_losses(const ad::Var& d_real, const ad::Var& d_fake, bool saturating = false);

struct WLosses {
  ad::Var critic_loss;  // mean(c_fake) - mean(c_real)
  ad::Var gen_loss;     // -mean(c_fake)
};

WLosses wloss(const ad::Var& c_real, const ad::Var& c_fake);

// eps * x_real + (1 - eps) * x_fake with one eps per row. eps must be
// [m, 1] (or [m]) with values in [0, 1].
ad::Tensor interpolate(const ad::Tensor& x_real, const ad::Tensor& x_fake, const ad::Tensor& eps);

using CriticFn = std::function<ad::Var(const ad::Var& x)>;

struct Penalty {
  ad::Var value;
  // Per-sample ||grad_x C(x_hat)||_2.
  ad::Tensor norms;
};

// lambda * mean_i (||grad_x C(x_hat_i)||_2 - 1)^2 with the norm taken over
// each row of x_hat. x_hat must be a leaf that requires gradients on a
// second-order graph; the result is differentiable w.r.t. everything the
// critic closes over.
Penalty gradient_penalty(const CriticFn& critic, const ad::Var& x_hat, float lambda);

}  // namespace csi4::train
