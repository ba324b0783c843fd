#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csi4/data/csi_batch.hpp"
#include "csi4/models/networks.hpp"
#include "csi4/training/adam.hpp"

namespace csi4::train {

enum class LossKind { bce, wasserstein_gp };

const char* to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct TrainConfig {
  std::size_t latent_dim = 100;
  std::size_t batch_size = 32;
  double learning_rate = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  double lambda_gp = 10.0;
  std::size_t n_critic = 5;
  // Generator updates.
  std::size_t epochs = 30000;
  std::size_t save_every = 500;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::wasserstein_gp;
  // Per-class size of the sample set emitted every save_every updates.
  std::size_t samples_per_class = 100;
  // BCE only: minimize log(1 - D(G(z))) instead of -log D(G(z)).
  bool saturating_g_loss = false;
  // Fill the wall_ms log column. Off by default so logs are reproducible.
  bool record_wall_time = false;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
};

struct LogRow {
  std::size_t iter = 0;
  double gen_loss = 0.0;
  double critic_loss = 0.0;
  std::optional<double> grad_penalty;
  std::optional<double> disc_acc;
  std::optional<double> wall_ms;
};

struct TrainLog {
  std::vector<LogRow> rows;

  // iter,gen_loss,critic_loss,grad_penalty,disc_acc,wall_ms
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Mean |critic_loss| over the last `window` rows divided by the mean over
// the first `window` rows.
double critic_loss_window_ratio(const TrainLog& log, std::size_t window);

// Discriminator accuracy above 0.99 for at least 80 % of the final quarter,
// or generator loss mean of the final quarter above that of the first.
bool bce_failure_signature(const TrainLog& log);

struct SampleSet {
  std::size_t iter = 0;
  data::CsiBatch samples;
};

// Called every save_every generator updates with the models at that point.
struct Snapshot {
  std::size_t iter = 0;
  const models::GeneratorSpec* generator_spec = nullptr;
  const models::ModelParams* generator = nullptr;
  // Critic (cWGAN) or discriminator (BCE).
  const models::ModelParams* adversary = nullptr;
  const data::CsiBatch* samples = nullptr;
};
using SnapshotHook = std::function<void(const Snapshot&)>;

struct GanResult {
  // Generator spec with the amplitude range of the training data filled in.
  models::GeneratorSpec generator_spec;
  models::ModelParams generator;
  models::ModelParams adversary;
  TrainLog log;
  std::vector<SampleSet> samples;
  std::size_t generator_updates = 0;
  std::size_t adversary_updates = 0;
};

// Conditional WGAN-GP. `data` must be normalized and match both specs.
// Every generator update follows n_critic critic updates on fresh
// minibatches, noise and interpolation weights. NaN aborts with a
// NumericError naming the iteration; an empty dataset is a DataError.
GanResult train_cwgan(const data::CsiBatch& data, const models::GeneratorSpec& gen,
                      const models::CriticSpec& critic, const TrainConfig& cfg,
                      const SnapshotHook& on_save = {});

// Conditional GAN with BCE loss, one discriminator update per generator
// update. The log records discriminator accuracy at threshold 0.5.
GanResult train_cgan_bce(const data::CsiBatch& data, const models::GeneratorSpec& gen,
                         const models::DiscriminatorSpec& disc, const TrainConfig& cfg,
                         const SnapshotHook& on_save = {});

// Balanced labeled batch of count_per_class samples per class (labels cycle
// 0..K-1), mapped from [-1, 1] back onto the spec's amplitude range and
// tagged synthetic.
data::CsiBatch generate_synthetic(const models::GeneratorSpec& spec,
                                  const models::ModelParams& params,
                                  std::size_t count_per_class, std::uint64_t seed);

struct ClassifierTrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

// Softmax cross entropy with Adam (0.9, 0.999), full shuffled passes. A
// training set with a single class records a warning.
models::ModelParams train_classifier(const data::CsiBatch& train, const models::ClassifierSpec& spec,
                                     const ClassifierTrainConfig& cfg);

// Fraction of correct argmax predictions.
double classifier_accuracy(const models::ClassifierSpec& spec, const models::ModelParams& params,
                           const data::CsiBatch& batch);

}  // namespace csi4::train
