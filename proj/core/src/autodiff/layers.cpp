#include "csi4/autodiff/layers.hpp"

#include <cmath>
#include <string>

#include "csi4/common/errors.hpp"

namespace csi4::ad {
namespace {

void require_params(std::span<const Var> params, std::size_t count, LayerKind kind) {
  if (params.size() != count) {
    throw ContractError(std::string(to_string(kind)) + " expects " + std::to_string(count) +
                        " parameter tensors, got " + std::to_string(params.size()));
  }
}

void require_shape(const Var& v, const Shape& expected, const char* what) {
  if (v.shape() != expected) {
    throw DimensionError(std::string(what) + " has shape " + to_string(v.shape()) +
                         ", expected " + to_string(expected));
  }
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::linear: return "linear";
    case LayerKind::embedding: return "embedding";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::relu: return "relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::dropout: return "dropout";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batchnorm2d: return "batchnorm2d";
    case LayerKind::maxpool2d: return "maxpool2d";
  }
  return "unknown";
}

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::linear;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::embedding(std::size_t rows, std::size_t width) {
  LayerSpec s;
  s.kind = LayerKind::embedding;
  s.in = rows;
  s.out = width;
  return s;
}

LayerSpec LayerSpec::leaky(float slope) {
  LayerSpec s;
  s.kind = LayerKind::leaky_relu;
  s.slope = slope;
  return s;
}

LayerSpec LayerSpec::activation(LayerKind kind) {
  LayerSpec s;
  s.kind = kind;
  return s;
}

LayerSpec LayerSpec::dropout(float rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                          std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.in = in_channels;
  s.out = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::batchnorm(std::size_t channels) {
  LayerSpec s;
  s.kind = LayerKind::batchnorm2d;
  s.in = channels;
  s.out = channels;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::maxpool2d;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

void LayerSpec::validate() const {
  auto positive = [this](std::size_t v, const char* field) {
    if (v == 0) {
      throw ContractError(std::string(to_string(kind)) + ": " + field + " must be positive");
    }
  };
  switch (kind) {
    case LayerKind::linear:
    case LayerKind::embedding:
      positive(in, "in");
      positive(out, "out");
      break;
    case LayerKind::conv2d:
      positive(in, "in");
      positive(out, "out");
      positive(kernel, "kernel");
      positive(stride, "stride");
      break;
    case LayerKind::batchnorm2d: positive(in, "channels"); break;
    case LayerKind::maxpool2d:
      positive(kernel, "kernel");
      positive(stride, "stride");
      break;
    case LayerKind::leaky_relu:
      if (!(slope > 0.0f && slope < 1.0f)) {
        throw ContractError("leaky_relu slope must lie in (0, 1)");
      }
      break;
    case LayerKind::dropout:
      if (!(rate >= 0.0f && rate < 1.0f)) throw ContractError("dropout rate must lie in [0, 1)");
      break;
    case LayerKind::relu:
    case LayerKind::tanh:
    case LayerKind::sigmoid: break;
    default: throw ContractError("unknown layer kind " + std::to_string(static_cast<int>(kind)));
  }
}

std::vector<ParamShape> LayerSpec::param_shapes() const {
  switch (kind) {
    case LayerKind::linear: return {{"weight", {in, out}, true}, {"bias", {out}, true}};
    case LayerKind::embedding: return {{"weight", {in, out}, true}};
    case LayerKind::conv2d:
      return {{"weight", {kernel * kernel * in, out}, true}, {"bias", {out}, true}};
    case LayerKind::batchnorm2d:
      return {{"gamma", {in}, true},
              {"beta", {in}, true},
              {"running_mean", {in}, false},
              {"running_var", {in}, false}};
    default: return {};
  }
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add(matmul(x, weight), bias);
}

Var dropout(const Var& x, float rate, Mode mode, Rng* rng) {
  if (mode == Mode::eval || rate == 0.0f) return x;
  if (rng == nullptr) throw ContractError("dropout in train mode needs a random stream");
  // Inverted dropout: survivors are scaled so the expectation is unchanged.
  const float keep_scale = 1.0f / (1.0f - rate);
  Tensor mask(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->uniform() < rate ? 0.0f : keep_scale;
  }
  return mul_constant(x, std::move(mask));
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, std::size_t kernel,
           std::size_t stride, std::size_t padding) {
  if (x.value().rank() != 4) {
    throw DimensionError("conv2d expects NHWC input, got " + to_string(x.shape()));
  }
  const std::size_t n = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t c = x.shape()[3];
  if (weight.value().rank() != 2 || weight.shape()[0] != kernel * kernel * c) {
    throw DimensionError("conv2d weight " + to_string(weight.shape()) + " does not fit input " +
                         to_string(x.shape()) + " with kernel " + std::to_string(kernel));
  }
  if (h + 2 * padding < kernel || w + 2 * padding < kernel) {
    throw DimensionError("conv2d kernel larger than padded input " + to_string(x.shape()));
  }
  const std::size_t out_c = weight.shape()[1];
  const std::size_t ho = (h + 2 * padding - kernel) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kernel) / stride + 1;
  const std::size_t patch = kernel * kernel * c;

  // im2col as a gather: row = output pixel, column = (ky, kx, channel).
  auto index = std::make_shared<std::vector<std::int64_t>>(n * ho * wo * patch);
  auto* dst = index->data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const auto iy = static_cast<std::int64_t>(oy * stride + ky) - static_cast<std::int64_t>(padding);
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const auto ix =
                static_cast<std::int64_t>(ox * stride + kx) - static_cast<std::int64_t>(padding);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::int64_t>(h) &&
                                ix < static_cast<std::int64_t>(w);
            for (std::size_t ch = 0; ch < c; ++ch) {
              *dst++ = inside ? static_cast<std::int64_t>(
                                    ((b * h + static_cast<std::size_t>(iy)) * w +
                                     static_cast<std::size_t>(ix)) * c + ch)
                              : -1;
            }
          }
        }
      }
    }
  }
  Var cols = gather_flat(x, std::move(index), Shape{n * ho * wo, patch});
  Var y = add(matmul(cols, weight), bias);
  return reshape(y, Shape{n, ho, wo, out_c});
}

Var maxpool2d(const Var& x, std::size_t kernel, std::size_t stride) {
  if (x.value().rank() != 4) {
    throw DimensionError("maxpool2d expects NHWC input, got " + to_string(x.shape()));
  }
  const std::size_t n = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t c = x.shape()[3];
  if (h < kernel || w < kernel) {
    throw DimensionError("maxpool2d window larger than input " + to_string(x.shape()));
  }
  const std::size_t ho = (h - kernel) / stride + 1;
  const std::size_t wo = (w - kernel) / stride + 1;
  const auto px = x.value().data();
  auto index = std::make_shared<std::vector<std::int64_t>>(n * ho * wo * c);
  std::size_t k = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = ((b * h + oy * stride) * w + ox * stride) * c + ch;
          for (std::size_t ky = 0; ky < kernel; ++ky) {
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              const std::size_t at = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
              if (px[at] > px[best]) best = at;
            }
          }
          (*index)[k++] = static_cast<std::int64_t>(best);
        }
      }
    }
  }
  return gather_flat(x, std::move(index), Shape{n, ho, wo, c});
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, const Tensor& running_mean,
              const Tensor& running_var, Mode mode, std::optional<BatchNormUpdate>* update) {
  const Shape in_shape = x.shape();
  if (in_shape.size() < 2) throw DimensionError("batchnorm expects at least [N, C]");
  const std::size_t channels = in_shape.back();
  const Shape chan{channels};
  require_shape(gamma, chan, "batchnorm gamma");
  require_shape(beta, chan, "batchnorm beta");
  const std::size_t rows = x.value().size() / channels;
  Var flat = in_shape.size() == 2 ? x : reshape(x, Shape{rows, channels});
  Graph& g = x.graph();

  Var normalized;
  if (mode == Mode::train) {
    if (rows < 1) throw ContractError("batchnorm in train mode needs a nonempty batch");
    Var mu = mean(flat, 0);
    Var centered = sub(flat, mu);
    Var var = mean(square(centered), 0);
    normalized = div(centered, sqrt(add_scalar(var, kBatchNormEps)));
    if (update != nullptr) {
      BatchNormUpdate u{Tensor(chan), Tensor(chan)};
      const float unbias = rows > 1 ? static_cast<float>(rows) / static_cast<float>(rows - 1) : 1.0f;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        u.running_mean[ch] = (1.0f - kBatchNormMomentum) * running_mean[ch] +
                             kBatchNormMomentum * mu.value()[ch];
        u.running_var[ch] = (1.0f - kBatchNormMomentum) * running_var[ch] +
                            kBatchNormMomentum * var.value()[ch] * unbias;
      }
      *update = std::move(u);
    }
  } else {
    Tensor inv_std(chan);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      inv_std[ch] = 1.0f / std::sqrt(running_var[ch] + kBatchNormEps);
    }
    normalized = mul(sub(flat, g.constant(running_mean)), g.constant(std::move(inv_std)));
  }
  Var out = add(mul(normalized, gamma), beta);
  return in_shape.size() == 2 ? out : reshape(out, in_shape);
}

Var layer_forward(const LayerSpec& spec, std::span<const Var> params, const Var& input,
                  const LayerContext& ctx) {
  switch (spec.kind) {
    case LayerKind::linear: {
      require_params(params, 2, spec.kind);
      if (input.value().rank() != 2 || input.shape()[1] != spec.in) {
        throw DimensionError("linear expects [m x " + std::to_string(spec.in) + "], got " +
                             to_string(input.shape()));
      }
      return linear(input, params[0], params[1]);
    }
    case LayerKind::embedding: {
      require_params(params, 1, spec.kind);
      return gather_rows(params[0], ctx.indices);
    }
    case LayerKind::leaky_relu: return leaky_relu(input, spec.slope);
    case LayerKind::relu: return relu(input);
    case LayerKind::tanh: return tanh(input);
    case LayerKind::sigmoid: return sigmoid(input);
    case LayerKind::dropout: return dropout(input, spec.rate, ctx.mode, ctx.rng);
    case LayerKind::conv2d: {
      require_params(params, 2, spec.kind);
      if (input.value().rank() != 4 || input.shape()[3] != spec.in) {
        throw DimensionError("conv2d expects NHWC input with " + std::to_string(spec.in) +
                             " channels, got " + to_string(input.shape()));
      }
      return conv2d(input, params[0], params[1], spec.kernel, spec.stride, spec.padding);
    }
    case LayerKind::batchnorm2d: {
      require_params(params, 4, spec.kind);
      if (input.shape().empty() || input.shape().back() != spec.in) {
        throw DimensionError("batchnorm expects " + std::to_string(spec.in) +
                             " channels, got " + to_string(input.shape()));
      }
      return batchnorm(input, params[0], params[1], params[2].value(), params[3].value(),
                       ctx.mode, ctx.batchnorm_update);
    }
    case LayerKind::maxpool2d: return maxpool2d(input, spec.kernel, spec.stride);
  }
  throw ContractError("unknown layer kind");
}

}  // namespace csi4::ad
