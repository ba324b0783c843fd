#include "csi4/models/networks.hpp"

#include <algorithm>
#include <string>

#include "csi4/common/errors.hpp"

namespace csi4::models {
namespace {

using ad::LayerKind;
using ad::LayerSpec;

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ContractError(std::string(what) + " must be positive");
}

void require_widths(const std::vector<std::size_t>& widths, std::size_t count, const char* what) {
  if (widths.size() != count) {
    throw ContractError(std::string(what) + " needs exactly " + std::to_string(count) +
                        " hidden widths, got " + std::to_string(widths.size()));
  }
  for (auto w : widths) require_positive(w, what);
}

void require_slope(float slope) {
  if (!(slope > 0.0f && slope < 1.0f)) throw ContractError("leaky slope must lie in (0, 1)");
}

std::vector<NamedLayer> with_embedding(std::size_t classes, std::size_t width,
                                       std::vector<NamedLayer> rest) {
  rest.insert(rest.begin(), NamedLayer{"embed", LayerSpec::embedding(classes, width)});
  return rest;
}

ad::Var conditioned_input(const BoundParams& params, const ad::Var& x,
                          std::span<const int> labels, std::size_t num_classes) {
  check_labels(labels, num_classes);
  if (x.value().rank() != 2 || x.shape()[0] != labels.size()) {
    throw DimensionError("input " + ad::to_string(x.shape()) + " does not match " +
                         std::to_string(labels.size()) + " labels");
  }
  return ad::concat_cols(x, ad::gather_rows(params["embed.weight"], labels));
}

}  // namespace

void check_labels(std::span<const int> labels, std::size_t num_classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
  }
}

void GeneratorSpec::validate() const {
  require_positive(latent_dim, "generator latent_dim");
  require_positive(num_classes, "generator num_classes");
  require_positive(embed_dim, "generator embed_dim");
  require_positive(antennas, "generator antennas");
  require_positive(time, "generator time");
  require_widths(hidden, 4, "generator");
  require_slope(slope);
  if (!(amplitude_max >= amplitude_min)) throw ContractError("generator amplitude range inverted");
}

std::vector<NamedLayer> GeneratorSpec::layers() const {
  std::vector<NamedLayer> out;
  std::size_t in = latent_dim + embed_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    out.push_back({"fc" + idx, LayerSpec::linear(in, hidden[i])});
    if (batchnorm) out.push_back({"bn" + idx, LayerSpec::batchnorm(hidden[i])});
    out.push_back({"act" + idx, activation == Activation::relu
                                    ? LayerSpec::activation(LayerKind::relu)
                                    : LayerSpec::leaky(slope)});
    in = hidden[i];
  }
  out.push_back({"fc" + std::to_string(hidden.size() + 1), LayerSpec::linear(in, out_features())});
  out.push_back({"out", LayerSpec::activation(LayerKind::tanh)});
  return out;
}

GeneratorSpec GeneratorSpec::bce_variant(GeneratorSpec base) {
  base.activation = Activation::relu;
  base.batchnorm = true;
  return base;
}

void CriticSpec::validate() const {
  require_positive(in_features, "critic in_features");
  require_positive(num_classes, "critic num_classes");
  require_positive(embed_dim, "critic embed_dim");
  require_widths(hidden, 2, "critic");
  require_slope(slope);
  if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
    throw ContractError("critic dropout rate must lie in [0, 1)");
  }
}

std::vector<NamedLayer> CriticSpec::layers() const {
  return {
      {"fc1", LayerSpec::linear(in_features + embed_dim, hidden[0])},
      {"act1", LayerSpec::leaky(slope)},
      {"fc2", LayerSpec::linear(hidden[0], hidden[1])},
      {"act2", LayerSpec::leaky(slope)},
      {"drop2", LayerSpec::dropout(dropout_rate)},
      {"fc3", LayerSpec::linear(hidden[1], 1)},
  };
}

void DiscriminatorSpec::validate() const {
  require_positive(in_features, "discriminator in_features");
  require_positive(num_classes, "discriminator num_classes");
  require_positive(embed_dim, "discriminator embed_dim");
  require_widths(hidden, 4, "discriminator");
  require_slope(slope);
}

std::vector<NamedLayer> DiscriminatorSpec::layers() const {
  std::vector<NamedLayer> out;
  std::size_t in = in_features + embed_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    out.push_back({"fc" + idx, LayerSpec::linear(in, hidden[i])});
    if (batchnorm) out.push_back({"bn" + idx, LayerSpec::batchnorm(hidden[i])});
    out.push_back({"act" + idx, LayerSpec::leaky(slope)});
    in = hidden[i];
  }
  out.push_back({"fc5", LayerSpec::linear(in, 1)});
  out.push_back({"out", LayerSpec::activation(LayerKind::sigmoid)});
  return out;
}

void ClassifierSpec::validate() const {
  require_positive(antennas, "classifier antennas");
  require_positive(time, "classifier time");
  require_positive(num_classes, "classifier num_classes");
  require_widths(conv_channels, 3, "classifier");
  require_positive(kernel, "classifier kernel");
  require_positive(pool, "classifier pool");
  const auto [h, w] = feature_plane();
  if (h == 0 || w == 0) {
    throw ContractError("classifier input " + std::to_string(antennas) + "x" +
                        std::to_string(time) + " is too small for three pooling stages");
  }
}

std::pair<std::size_t, std::size_t> ClassifierSpec::feature_plane() const {
  std::size_t h = antennas, w = time;
  for (int block = 0; block < 3; ++block) {
    if (h + 2 * padding < kernel || w + 2 * padding < kernel) return {0, 0};
    h = h + 2 * padding - kernel + 1;
    w = w + 2 * padding - kernel + 1;
    if (h < pool || w < pool) return {0, 0};
    h = (h - pool) / pool + 1;
    w = (w - pool) / pool + 1;
  }
  return {h, w};
}

std::vector<NamedLayer> ClassifierSpec::conv_layers() const {
  std::vector<NamedLayer> out;
  std::size_t in = 1;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    out.push_back({"conv" + idx, LayerSpec::conv(in, conv_channels[i], kernel, 1, padding)});
    out.push_back({"bn" + idx, LayerSpec::batchnorm(conv_channels[i])});
    out.push_back({"relu" + idx, LayerSpec::activation(LayerKind::relu)});
    out.push_back({"pool" + idx, LayerSpec::maxpool(pool, pool)});
    in = conv_channels[i];
  }
  return out;
}

NamedLayer ClassifierSpec::head() const {
  const auto [h, w] = feature_plane();
  return {"head", LayerSpec::linear(h * w * conv_channels.back(), num_classes)};
}

ModelParams build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  return ModelParams(
      init_layers(with_embedding(spec.num_classes, spec.embed_dim, spec.layers()), seed,
                  InitScheme::gan_normal),
      seed);
}

ModelParams build_critic(const CriticSpec& spec, std::uint64_t seed) {
  spec.validate();
  return ModelParams(
      init_layers(with_embedding(spec.num_classes, spec.embed_dim, spec.layers()), seed,
                  InitScheme::gan_normal),
      seed);
}

ModelParams build_discriminator_bce(const DiscriminatorSpec& spec, std::uint64_t seed) {
  spec.validate();
  return ModelParams(
      init_layers(with_embedding(spec.num_classes, spec.embed_dim, spec.layers()), seed,
                  InitScheme::gan_normal),
      seed);
}

ModelParams build_classifier(const ClassifierSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto layers = spec.conv_layers();
  layers.push_back(spec.head());
  return ModelParams(init_layers(layers, seed, InitScheme::kaiming_normal), seed);
}

ad::Var generator_forward(const GeneratorSpec& spec, const BoundParams& params, const ad::Var& z,
                          std::span<const int> labels, const ForwardContext& ctx) {
  if (z.value().rank() != 2 || z.shape()[1] != spec.latent_dim) {
    throw DimensionError("generator expects noise [m x " + std::to_string(spec.latent_dim) +
                         "], got " + ad::to_string(z.shape()));
  }
  return run_layers(spec.layers(), params, conditioned_input(params, z, labels, spec.num_classes),
                    ctx);
}

ad::Var critic_forward(const CriticSpec& spec, const BoundParams& params, const ad::Var& x,
                       std::span<const int> labels, const ForwardContext& ctx) {
  if (x.value().rank() != 2 || x.shape()[1] != spec.in_features) {
    throw DimensionError("critic expects [m x " + std::to_string(spec.in_features) + "], got " +
                         ad::to_string(x.shape()));
  }
  return run_layers(spec.layers(), params, conditioned_input(params, x, labels, spec.num_classes),
                    ctx);
}

ad::Var discriminator_forward(const DiscriminatorSpec& spec, const BoundParams& params,
                              const ad::Var& x, std::span<const int> labels,
                              const ForwardContext& ctx) {
  if (x.value().rank() != 2 || x.shape()[1] != spec.in_features) {
    throw DimensionError("discriminator expects [m x " + std::to_string(spec.in_features) +
                         "], got " + ad::to_string(x.shape()));
  }
  return run_layers(spec.layers(), params, conditioned_input(params, x, labels, spec.num_classes),
                    ctx);
}

ad::Var classifier_forward(const ClassifierSpec& spec, const BoundParams& params,
                           const ad::Var& x, const ForwardContext& ctx) {
  const ad::Shape& s = x.shape();
  const std::size_t plane = spec.antennas * spec.time;
  const bool ok = !s.empty() && s[0] > 0 && x.value().size() == s[0] * plane &&
                  (s == ad::Shape{s[0], spec.antennas, spec.time} ||
                   s == ad::Shape{s[0], 1, spec.antennas, spec.time} ||
                   s == ad::Shape{s[0], plane});
  if (!ok) {
    throw DimensionError("classifier expects [m x 1 x " + std::to_string(spec.antennas) + " x " +
                         std::to_string(spec.time) + "], got " + ad::to_string(s));
  }
  const std::size_t m = s[0];
  // One channel: NCHW and NHWC share a memory layout.
  ad::Var h = ad::reshape(x, ad::Shape{m, spec.antennas, spec.time, 1});
  h = run_layers(spec.conv_layers(), params, h, ctx);
  h = ad::reshape(h, ad::Shape{m, h.value().size() / m});
  return run_layers({spec.head()}, params, h, ctx);
}

ad::Tensor generate(const GeneratorSpec& spec, const ModelParams& params, const ad::Tensor& z,
                    std::span<const int> labels) {
  ad::Graph g;
  ad::NoGradGuard no_grad(g);
  BoundParams bound(g, params, false);
  return generator_forward(spec, bound, g.constant(z), labels, {}).value();
}

ad::Tensor critic_scores(const CriticSpec& spec, const ModelParams& params, const ad::Tensor& x,
                         std::span<const int> labels) {
  ad::Graph g;
  ad::NoGradGuard no_grad(g);
  BoundParams bound(g, params, false);
  return critic_forward(spec, bound, g.constant(x), labels, {}).value();
}

ad::Tensor classifier_logits(const ClassifierSpec& spec, const ModelParams& params,
                             const ad::Tensor& x) {
  ad::Graph g;
  ad::NoGradGuard no_grad(g);
  BoundParams bound(g, params, false);
  return classifier_forward(spec, bound, g.constant(x), {}).value();
}

std::vector<int> classifier_predict(const ClassifierSpec& spec, const ModelParams& params,
                                    const ad::Tensor& x, std::size_t batch_size) {
  const std::size_t m = x.shape().empty() ? 0 : x.shape()[0];
  std::vector<int> out;
  out.reserve(m);
  if (m == 0) return out;
  const std::size_t per = x.size() / m;
  for (std::size_t start = 0; start < m; start += batch_size) {
    const std::size_t count = std::min(batch_size, m - start);
    ad::Shape shape = x.shape();
    shape[0] = count;
    std::vector<float> chunk(x.data().begin() + static_cast<std::ptrdiff_t>(start * per),
                             x.data().begin() + static_cast<std::ptrdiff_t>((start + count) * per));
    const ad::Tensor logits = classifier_logits(spec, params, ad::Tensor(shape, std::move(chunk)));
    const std::size_t k = logits.dim(1);
    for (std::size_t r = 0; r < count; ++r) {
      const float* row = logits.data().data() + r * k;
      out.push_back(static_cast<int>(std::max_element(row, row + k) - row));
    }
  }
  return out;
}

}  // namespace csi4::models
