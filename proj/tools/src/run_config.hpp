#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csi4/common/errors.hpp"
#include "csi4/data/dataset.hpp"
#include "csi4/eval/metrics.hpp"
#include "csi4/models/networks.hpp"
#include "csi4/training/trainer.hpp"

namespace csi4::cli {

// Bad flags, unknown config keys, unparsable values. Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct DataSection {
  std::string path;
  double split_ratio = 0.75;
  std::uint64_t split_seed = 0;
  bool stratified = true;
};

struct EvalSection {
  std::string synthetic = "none";
  std::size_t gan_test_cap_factor = 4;
  // "test" scores GAN-train on the held-out real split, "all" on every real sample.
  std::string gan_train_target = "test";
  std::size_t diversity_samples = 256;
  std::uint64_t subsample_seed = 0;
  std::string user;
};

struct GenerateSection {
  std::string ckpt;
  std::size_t per_class = 3750;
  std::uint64_t seed = 0;
};

// Every setting a command can use. Defaults, then the config file, then
// command-line flags.
struct RunConfig {
  DataSection data;
  data::SynthCorpusSpec synth;
  train::TrainConfig train;
  models::GeneratorSpec generator;
  models::CriticSpec critic;
  models::DiscriminatorSpec discriminator;
  models::ClassifierSpec classifier;
  train::ClassifierTrainConfig classifier_train;
  EvalSection eval;
  GenerateSection generate;

  // Assigns "section.key" from its text form.
  void set(const std::string& key, const std::string& value);
  void load_ini(const std::filesystem::path& path);
  // Every key in a fixed order; load_ini of the result reproduces *this.
  std::string to_ini(const std::string& command) const;

  // Specs with geometry and class count taken from a dataset.
  models::GeneratorSpec generator_for(const data::CsiBatch& d) const;
  models::CriticSpec critic_for(const data::CsiBatch& d) const;
  models::DiscriminatorSpec discriminator_for(const data::CsiBatch& d) const;
  models::ClassifierSpec classifier_for(const data::CsiBatch& d) const;
  eval::MetricConfig metric_config() const;
};

std::string version_string();

}  // namespace csi4::cli
