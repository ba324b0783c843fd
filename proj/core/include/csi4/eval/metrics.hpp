#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csi4/data/csi_batch.hpp"
#include "csi4/data/dataset.hpp"
#include "csi4/models/networks.hpp"
#include "csi4/training/trainer.hpp"

namespace csi4::eval {

// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes)
      : k_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return k_; }
  std::size_t& at(std::size_t truth, std::size_t predicted);
  std::size_t at(std::size_t truth, std::size_t predicted) const;
  std::size_t row_sum(std::size_t truth) const;
  std::size_t trace() const;
  std::size_t total() const;
  // trace / total; 0 for an empty matrix.
  double accuracy() const;

  // CSV grid: header "true\pred,0,1,...", one row per true class.
  std::string to_csv() const;
  static ConfusionMatrix from_csv(const std::string& text);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes);

struct MetricResult {
  ConfusionMatrix confusion;
  std::size_t train_size = 0;

  double accuracy() const { return confusion.accuracy(); }
  std::size_t test_size() const { return confusion.total(); }
  friend bool operator==(const MetricResult&, const MetricResult&) = default;
};

struct MetricConfig {
  train::ClassifierTrainConfig classifier;
  // GAN-test evaluates on at most gan_test_cap_factor x |real test| synthetic
  // samples (balanced subsample). 0 disables the cap.
  std::size_t gan_test_cap_factor = 4;
  std::uint64_t subsample_seed = 0;
};

// Trains a fresh classifier on `train` and scores it on `test`. Both batches
// must share geometry and class count; an empty test set is a ContractError.
MetricResult train_and_score(const data::CsiBatch& train, const data::CsiBatch& test,
                             const models::ClassifierSpec& spec,
                             const train::ClassifierTrainConfig& cfg);

// Classifier trained on synthetic only, scored on real data.
MetricResult gan_train_score(const data::CsiBatch& synthetic, const data::CsiBatch& real_test,
                             const models::ClassifierSpec& spec, const MetricConfig& cfg);

// Classifier trained on real data, scored on (at most `cap` of) the synthetic
// samples. cap = 0 scores all of them.
MetricResult gan_test_score(const data::CsiBatch& real_train, const data::CsiBatch& synthetic,
                            const models::ClassifierSpec& spec, const MetricConfig& cfg,
                            std::size_t cap = 0);

MetricResult baseline_accuracy(const data::SplitPair& split, const models::ClassifierSpec& spec,
                               const MetricConfig& cfg);

// Train on real train + synthetic, score on real test. An empty synthetic
// batch takes the baseline path unchanged.
MetricResult augmented_accuracy(const data::SplitPair& split, const data::CsiBatch& synthetic,
                                const models::ClassifierSpec& spec, const MetricConfig& cfg);

enum class DiversityStatus { ok, collapsed, insufficient };
const char* to_string(DiversityStatus s);
DiversityStatus parse_diversity_status(const std::string& text);

struct ClassDiversity {
  int label = 0;
  std::size_t count = 0;
  // Samples used for the pairwise distances.
  std::size_t used = 0;
  double mean_pairwise_l2 = 0.0;
  std::vector<double> feature_std;
  DiversityStatus status = DiversityStatus::insufficient;

  double mean_feature_std() const;
  friend bool operator==(const ClassDiversity&, const ClassDiversity&) = default;
};

// Per-class mean pairwise L2 distance (over at most `max_pairs_samples`
// evenly spaced samples of the class) and per-feature standard deviation
// (over all samples). A class is collapsed when its mean distance falls
// below 1e-3 x feature count, insufficient with fewer than 2 samples.
std::vector<ClassDiversity> diversity_metrics(const data::CsiBatch& batch,
                                              std::size_t max_pairs_samples = 256);

}  // namespace csi4::eval
