#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csi4/models/params.hpp"

namespace csi4::models {

enum class Activation : std::uint8_t { leaky_relu = 0, relu = 1 };

// Conditional generator: label embedding concatenated to the noise vector,
// then five linear layers. Hidden layers use `activation` (optionally
// preceded by batchnorm); the output layer uses tanh.
struct GeneratorSpec {
  std::size_t latent_dim = 100;
  std::size_t num_classes = 8;
  std::size_t embed_dim = 8;
  std::vector<std::size_t> hidden{128, 256, 512, 1024};
  std::size_t antennas = 30;
  std::size_t time = 50;
  Activation activation = Activation::leaky_relu;
  bool batchnorm = false;
  float slope = 0.2f;
  // Amplitude range that the [-1, 1] output maps back onto.
  float amplitude_min = -1.0f;
  float amplitude_max = 1.0f;

  std::size_t out_features() const { return antennas * time; }
  void validate() const;
  // Layers after the embedding/concatenation step.
  std::vector<NamedLayer> layers() const;

  // The BCE baseline variant: ReLU activations with batchnorm.
  static GeneratorSpec bce_variant(GeneratorSpec base);
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

// Wasserstein critic: embedding concatenated to the flattened sample, then
// linear -> LeakyReLU -> linear -> LeakyReLU -> dropout -> linear(1).
// No output activation.
struct CriticSpec {
  std::size_t in_features = 1500;
  std::size_t num_classes = 8;
  std::size_t embed_dim = 8;
  std::vector<std::size_t> hidden{512, 256};
  float dropout_rate = 0.3f;
  float slope = 0.2f;

  void validate() const;
  std::vector<NamedLayer> layers() const;
  friend bool operator==(const CriticSpec&, const CriticSpec&) = default;
};

// BCE discriminator: five linear layers, batchnorm + LeakyReLU on the four
// hidden layers, sigmoid output.
struct DiscriminatorSpec {
  std::size_t in_features = 1500;
  std::size_t num_classes = 8;
  std::size_t embed_dim = 8;
  std::vector<std::size_t> hidden{512, 256, 128, 64};
  float slope = 0.2f;
  bool batchnorm = true;

  void validate() const;
  std::vector<NamedLayer> layers() const;
  friend bool operator==(const DiscriminatorSpec&, const DiscriminatorSpec&) = default;
};

// Pose classifier over one-channel antennas x time planes: three blocks of
// conv -> batchnorm -> ReLU -> maxpool, then a linear head.
struct ClassifierSpec {
  std::size_t antennas = 30;
  std::size_t time = 50;
  std::vector<std::size_t> conv_channels{16, 32, 64};
  std::size_t num_classes = 8;
  std::size_t kernel = 3;
  std::size_t padding = 1;
  std::size_t pool = 2;

  void validate() const;
  // Spatial size after the three blocks.
  std::pair<std::size_t, std::size_t> feature_plane() const;
  std::vector<NamedLayer> conv_layers() const;
  NamedLayer head() const;
  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

ModelParams build_generator(const GeneratorSpec& spec, std::uint64_t seed);
ModelParams build_critic(const CriticSpec& spec, std::uint64_t seed);
ModelParams build_discriminator_bce(const DiscriminatorSpec& spec, std::uint64_t seed);
ModelParams build_classifier(const ClassifierSpec& spec, std::uint64_t seed);

// Graph-level forward passes. Labels must lie in [0, num_classes) or a
// DataError is thrown.
ad::Var generator_forward(const GeneratorSpec& spec, const BoundParams& params, const ad::Var& z,
                          std::span<const int> labels, const ForwardContext& ctx);
ad::Var critic_forward(const CriticSpec& spec, const BoundParams& params, const ad::Var& x,
                       std::span<const int> labels, const ForwardContext& ctx);
ad::Var discriminator_forward(const DiscriminatorSpec& spec, const BoundParams& params,
                              const ad::Var& x, std::span<const int> labels,
                              const ForwardContext& ctx);
// Accepts [m, A, T], [m, 1, A, T] or [m, A*T]; returns [m, num_classes].
ad::Var classifier_forward(const ClassifierSpec& spec, const BoundParams& params,
                           const ad::Var& x, const ForwardContext& ctx);

// Eval-mode conveniences that build and discard a private graph.
ad::Tensor generate(const GeneratorSpec& spec, const ModelParams& params, const ad::Tensor& z,
                    std::span<const int> labels);
ad::Tensor critic_scores(const CriticSpec& spec, const ModelParams& params, const ad::Tensor& x,
                         std::span<const int> labels);
ad::Tensor classifier_logits(const ClassifierSpec& spec, const ModelParams& params,
                             const ad::Tensor& x);
// Argmax predictions in eval mode, processed in chunks of `batch_size`.
std::vector<int> classifier_predict(const ClassifierSpec& spec, const ModelParams& params,
                                    const ad::Tensor& x, std::size_t batch_size = 256);

void check_labels(std::span<const int> labels, std::size_t num_classes);

}  // namespace csi4::models
