#include "csi4/eval/metrics.hpp"

#include <cmath>
#include <sstream>

#include "csi4/common/errors.hpp"

namespace csi4::eval {

namespace {

void require_compatible(const data::CsiBatch& a, const data::CsiBatch& b, const char* what) {
  if (a.antennas() != b.antennas() || a.time() != b.time()) {
    throw DimensionError(std::string(what) + ": sample geometry differs (" +
                         std::to_string(a.antennas()) + "x" + std::to_string(a.time()) + " vs " +
                         std::to_string(b.antennas()) + "x" + std::to_string(b.time()) + ")");
  }
  if (a.num_classes != b.num_classes) {
    throw ContractError(std::string(what) + ": class counts differ (" +
                        std::to_string(a.num_classes) + " vs " + std::to_string(b.num_classes) + ")");
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t parse_count(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw FormatError("expected a count, got '" + s + "'");
  }
  if (pos != s.size() || (!s.empty() && s[0] == '-')) throw FormatError("expected a count, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t& ConfusionMatrix::at(std::size_t truth, std::size_t predicted) {
  if (truth >= k_ || predicted >= k_) throw ContractError("confusion index out of range");
  return counts_[truth * k_ + predicted];
}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= k_ || predicted >= k_) throw ContractError("confusion index out of range");
  return counts_[truth * k_ + predicted];
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(truth, j);
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += counts_[i * k_ + i];
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : double(trace()) / double(n);
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  out << "true\\pred";
  for (std::size_t j = 0; j < k_; ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < k_; ++i) {
    out << i;
    for (std::size_t j = 0; j < k_; ++j) out << ',' << counts_[i * k_ + j];
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix ConfusionMatrix::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty confusion CSV");
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "true\\pred") throw FormatError("bad confusion CSV header");
  const std::size_t k = header.size() - 1;
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::getline(in, line)) throw FormatError("confusion CSV has too few rows");
    const auto cells = split_fields(line);
    if (cells.size() != k + 1 || parse_count(cells[0]) != i) {
      throw FormatError("malformed confusion CSV row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < k; ++j) cm.counts_[i * k + j] = parse_count(cells[j + 1]);
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw FormatError("trailing data in confusion CSV");
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw DimensionError("label and prediction counts differ");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++cm.at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

MetricResult train_and_score(const data::CsiBatch& train, const data::CsiBatch& test,
                             const models::ClassifierSpec& spec,
                             const train::ClassifierTrainConfig& cfg) {
  if (test.empty()) throw ContractError("evaluation set is empty");
  require_compatible(train, test, "train/test");
  const auto params = train::train_classifier(train, spec, cfg);
  const auto pred = models::classifier_predict(spec, params, test.amplitudes);
  return {confusion(test.labels, pred, spec.num_classes), train.size()};
}

MetricResult gan_train_score(const data::CsiBatch& synthetic, const data::CsiBatch& real_test,
                             const models::ClassifierSpec& spec, const MetricConfig& cfg) {
  if (synthetic.empty()) throw ContractError("GAN-train needs synthetic samples");
  return train_and_score(synthetic, real_test, spec, cfg.classifier);
}

MetricResult gan_test_score(const data::CsiBatch& real_train, const data::CsiBatch& synthetic,
                            const models::ClassifierSpec& spec, const MetricConfig& cfg,
                            std::size_t cap) {
  if (synthetic.empty()) throw ContractError("GAN-test needs synthetic samples");
  if (cap == 0 || cap >= synthetic.size()) {
    return train_and_score(real_train, synthetic, spec, cfg.classifier);
  }
  return train_and_score(real_train, data::balanced_subsample(synthetic, cap, cfg.subsample_seed),
                         spec, cfg.classifier);
}

MetricResult baseline_accuracy(const data::SplitPair& split, const models::ClassifierSpec& spec,
                               const MetricConfig& cfg) {
  return train_and_score(split.train, split.test, spec, cfg.classifier);
}

MetricResult augmented_accuracy(const data::SplitPair& split, const data::CsiBatch& synthetic,
                                const models::ClassifierSpec& spec, const MetricConfig& cfg) {
  if (synthetic.empty()) return baseline_accuracy(split, spec, cfg);
  return train_and_score(data::merge(split.train, synthetic), split.test, spec, cfg.classifier);
}

const char* to_string(DiversityStatus s) {
  switch (s) {
    case DiversityStatus::ok: return "ok";
    case DiversityStatus::collapsed: return "collapsed";
    case DiversityStatus::insufficient: return "insufficient";
  }
  return "?";
}

DiversityStatus parse_diversity_status(const std::string& text) {
  if (text == "ok") return DiversityStatus::ok;
  if (text == "collapsed") return DiversityStatus::collapsed;
  if (text == "insufficient") return DiversityStatus::insufficient;
  throw FormatError("unknown diversity status '" + text + "'");
}

double ClassDiversity::mean_feature_std() const {
  if (feature_std.empty()) return 0.0;
  double s = 0.0;
  for (double v : feature_std) s += v;
  return s / double(feature_std.size());
}

std::vector<ClassDiversity> diversity_metrics(const data::CsiBatch& batch,
                                              std::size_t max_pairs_samples) {
  if (max_pairs_samples < 2) throw ContractError("diversity needs at least 2 samples per class");
  batch.validate();
  const std::size_t k = batch.num_classes, f = batch.features();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    members[static_cast<std::size_t>(batch.labels[i])].push_back(i);
  }
  std::vector<ClassDiversity> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& d = out[c];
    const auto& idx = members[c];
    d.label = static_cast<int>(c);
    d.count = idx.size();
    if (idx.size() < 2) continue;

    // Welford per feature.
    std::vector<double> mean(f, 0.0), m2(f, 0.0);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const auto row = batch.row(idx[n]);
      for (std::size_t j = 0; j < f; ++j) {
        const double delta = row[j] - mean[j];
        mean[j] += delta / double(n + 1);
        m2[j] += delta * (row[j] - mean[j]);
      }
    }
    d.feature_std.resize(f);
    for (std::size_t j = 0; j < f; ++j) d.feature_std[j] = std::sqrt(m2[j] / double(idx.size() - 1));

    d.used = std::min(idx.size(), max_pairs_samples);
    std::vector<std::size_t> pick(d.used);
    for (std::size_t i = 0; i < d.used; ++i) pick[i] = idx[i * idx.size() / d.used];
    double total = 0.0;
    for (std::size_t a = 0; a < d.used; ++a) {
      const auto ra = batch.row(pick[a]);
      for (std::size_t b = a + 1; b < d.used; ++b) {
        const auto rb = batch.row(pick[b]);
        double s = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
          const double diff = double(ra[j]) - rb[j];
          s += diff * diff;
        }
        total += std::sqrt(s);
      }
    }
    d.mean_pairwise_l2 = total / (double(d.used) * double(d.used - 1) / 2.0);
    d.status = d.mean_pairwise_l2 < 1e-3 * double(f) ? DiversityStatus::collapsed : DiversityStatus::ok;
  }
  return out;
}

}  // namespace csi4::eval
