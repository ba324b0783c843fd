#include "csi4/training/losses.hpp"

#include <cmath>
#include <string>

#include "csi4/common/errors.hpp"

namespace csi4::train {

namespace {

void require_no_nan(const ad::Var& v, const char* what) {
  for (float x : v.value().data()) {
    if (std::isnan(x)) throw NumericError(std::string("NaN in ") + what);
  }
}

ad::Var one_minus(const ad::Var& v) { return ad::add_scalar(ad::neg(v), 1.0f); }

}  // namespace

BceLosses bce_gan_losses(const ad::Var& d_real, const ad::Var& d_fake, bool saturating) {
  require_no_nan(d_real, "discriminator output on real samples");
  require_no_nan(d_fake, "discriminator output on fake samples");
  const ad::Var real = ad::clamp(d_real, kProbClamp, 1.0f - kProbClamp);
  const ad::Var fake = ad::clamp(d_fake, kProbClamp, 1.0f - kProbClamp);
  BceLosses out;
  out.d_loss = ad::neg(ad::add(ad::mean(ad::log(real)), ad::mean(ad::log(one_minus(fake)))));
  out.g_loss = saturating ? ad::mean(ad::log(one_minus(fake))) : ad::neg(ad::mean(ad::log(fake)));
  return out;
}

WLosses wloss(const ad::Var& c_real, const ad::Var& c_fake) {
  require_no_nan(c_real, "critic output on real samples");
  require_no_nan(c_fake, "critic output on fake samples");
  const ad::Var fake_mean = ad::mean(c_fake);
  return {ad::sub(fake_mean, ad::mean(c_real)), ad::neg(fake_mean)};
}

ad::Tensor interpolate(const ad::Tensor& x_real, const ad::Tensor& x_fake, const ad::Tensor& eps) {
  if (x_real.shape() != x_fake.shape() || x_real.rank() != 2) {
    throw DimensionError("interpolate needs equal [m x d] inputs, got " +
                         ad::to_string(x_real.shape()) + " and " + ad::to_string(x_fake.shape()));
  }
  const std::size_t m = x_real.dim(0), d = x_real.dim(1);
  if (eps.size() != m) {
    throw DimensionError("interpolate needs one weight per row, got " + ad::to_string(eps.shape()));
  }
  ad::Tensor out(x_real.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const float e = eps[i];
    if (!(e >= 0.0f && e <= 1.0f)) {
      throw ContractError("interpolation weight " + std::to_string(e) + " outside [0, 1]");
    }
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = e * x_real[i * d + j] + (1.0f - e) * x_fake[i * d + j];
    }
  }
  return out;
}

Penalty gradient_penalty(const CriticFn& critic, const ad::Var& x_hat, float lambda) {
  ad::Graph& g = x_hat.graph();
  if (g.order() != ad::Order::second) {
    throw CapabilityError("gradient penalty needs a second-order graph");
  }
  if (!x_hat.requires_grad()) throw ContractError("x_hat must be a leaf that requires gradients");
  if (x_hat.value().rank() != 2) throw DimensionError("x_hat must be [m x d]");
  // Rows are independent through the critic, so the gradient of the summed
  // scores holds every per-sample input gradient.
  const ad::Var scores = critic(x_hat);
  const ad::Var grad = g.input_gradient(ad::sum(scores), x_hat);
  const ad::Var norms = ad::sqrt(ad::add_scalar(ad::sum(ad::square(grad), 1), kNormEps));
  const ad::Var pen = ad::scale(ad::mean(ad::square(ad::add_scalar(norms, -1.0f))), lambda);
  return {pen, norms.value()};
}

}  // namespace csi4::train
