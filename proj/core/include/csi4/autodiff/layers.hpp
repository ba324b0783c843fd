#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csi4/autodiff/ops.hpp"
#include "csi4/common/rng.hpp"

namespace csi4::ad {

enum class Mode { train, eval };

enum class LayerKind {
  linear,
  embedding,
  leaky_relu,
  relu,
  tanh,
  sigmoid,
  dropout,
  conv2d,
  batchnorm2d,
  maxpool2d,
};

const char* to_string(LayerKind kind);

struct ParamShape {
  std::string name;
  Shape shape;
  bool trainable = true;
};

// One network layer. Field meaning depends on the kind:
//   linear      in -> out features; weight [in, out], bias [out]
//   embedding   `in` table rows, `out` width; weight [in, out]
//   conv2d      `in` -> `out` channels, square kernel/stride/padding;
//               weight [kernel*kernel*in, out], bias [out]; NHWC layout
//   batchnorm2d `in` channels (last axis); works for [N, C] and [N, H, W, C]
//   maxpool2d   square kernel/stride, no padding; NHWC layout
//   leaky_relu  slope; dropout rate
struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  float slope = 0.2f;
  float rate = 0.3f;

  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec embedding(std::size_t rows, std::size_t width);
  static LayerSpec leaky(float slope = 0.2f);
  static LayerSpec activation(LayerKind kind);
  static LayerSpec dropout(float rate = 0.3f);
  static LayerSpec conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                        std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec batchnorm(std::size_t channels);
  static LayerSpec maxpool(std::size_t kernel, std::size_t stride);

  // Throws ContractError when a size is zero, the dropout rate is outside
  // [0, 1) or the leaky slope outside (0, 1).
  void validate() const;

  // Parameters (and non-trainable buffers) in their canonical order.
  std::vector<ParamShape> param_shapes() const;
};

struct BatchNormUpdate {
  Tensor running_mean;
  Tensor running_var;
};

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.1f;

// Per-call inputs that are not tensors.
struct LayerContext {
  Mode mode = Mode::eval;
  // Dropout mask source; required for dropout in train mode.
  Rng* rng = nullptr;
  // Row indices for embedding lookups.
  std::span<const int> indices;
  // Receives updated running statistics from batchnorm in train mode.
  std::optional<BatchNormUpdate>* batchnorm_update = nullptr;
};

// Applies one layer. `params` follow param_shapes() order, buffers included.
// The embedding kind ignores `input` and looks up ctx.indices.
Var layer_forward(const LayerSpec& spec, std::span<const Var> params, const Var& input,
                  const LayerContext& ctx);

// Building blocks, exposed for tests and composite models.
Var linear(const Var& x, const Var& weight, const Var& bias);
Var dropout(const Var& x, float rate, Mode mode, Rng* rng);
Var conv2d(const Var& x_nhwc, const Var& weight, const Var& bias, std::size_t kernel,
           std::size_t stride, std::size_t padding);
Var maxpool2d(const Var& x_nhwc, std::size_t kernel, std::size_t stride);
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, const Tensor& running_mean,
              const Tensor& running_var, Mode mode, std::optional<BatchNormUpdate>* update);

}  // namespace csi4::ad
