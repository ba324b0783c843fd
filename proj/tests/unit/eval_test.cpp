#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "csi4/common/errors.hpp"
#include "csi4/common/rng.hpp"
#include "csi4/data/dataset.hpp"
#include "csi4/eval/metrics.hpp"
#include "csi4/eval/plots.hpp"
#include "csi4/eval/report.hpp"
#include "csi4/training/trainer.hpp"

namespace csi4 {
namespace {

namespace fs = std::filesystem;
using namespace eval;

models::ClassifierSpec small_classifier(std::size_t k) {
  models::ClassifierSpec s;
  s.antennas = 8;
  s.time = 10;
  s.conv_channels = {4, 8, 8};
  s.num_classes = k;
  return s;
}

data::SplitPair desk_split(std::size_t per_class, std::uint64_t seed) {
  data::SynthCorpusSpec cs;
  cs.per_class = per_class;
  cs.seed = seed;
  return data::split(data::synth_corpus(cs), 0.75, seed, true);
}

MetricConfig quick(std::size_t epochs = 10) {
  MetricConfig cfg;
  cfg.classifier.epochs = epochs;
  return cfg;
}

data::CsiBatch as_synthetic(data::CsiBatch b) {
  b.sources.assign(b.size(), data::Source::synthetic);
  return b;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("csi4_eval_" + std::to_string(::getpid()) + "_" +
                                                  std::to_string(counter_++))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

// ---- Confusion -----------------------------------------------------------

TEST(Confusion, CountsAndAccuracy) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2, 2};
  const std::vector<int> pred{0, 1, 1, 1, 2, 0, 2};
  const auto cm = confusion(truth, pred, 3);
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(2, 0), 1u);
  EXPECT_EQ(cm.trace(), 5u);
  EXPECT_EQ(cm.total(), 7u);
  EXPECT_EQ(cm.row_sum(2), 3u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 5.0 / 7.0);
  EXPECT_THROW(confusion(truth, std::vector<int>{0}, 3), DimensionError);
  EXPECT_THROW(confusion(std::vector<int>{3}, std::vector<int>{0}, 3), ContractError);
}

TEST(Confusion, CsvRoundTrip) {
  const auto cm = confusion(std::vector<int>{0, 1, 1, 2}, std::vector<int>{0, 2, 1, 2}, 3);
  EXPECT_EQ(cm.to_csv(), "true\\pred,0,1,2\n0,1,0,0\n1,0,1,1\n2,0,0,1\n");
  EXPECT_EQ(ConfusionMatrix::from_csv(cm.to_csv()), cm);
  EXPECT_THROW(ConfusionMatrix::from_csv("true\\pred,0,1\n0,1,x\n1,0,0\n"), FormatError);
  EXPECT_THROW(ConfusionMatrix::from_csv("true\\pred,0,1\n0,1,0\n"), FormatError);
  EXPECT_THROW(ConfusionMatrix::from_csv("nope\n"), FormatError);
}

// ---- Metrics -------------------------------------------------------------

TEST(Metrics, BaselineOnSeparableCorpus) {
  const auto split = desk_split(200, 7);
  const auto spec = small_classifier(4);
  const auto r = baseline_accuracy(split, spec, MetricConfig{});
  EXPECT_GE(r.accuracy(), 0.95);
  EXPECT_EQ(r.test_size(), split.test.size());
  EXPECT_EQ(r.train_size, split.train.size());
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(r.confusion.row_sum(c), split.test.class_counts()[c]);
  EXPECT_DOUBLE_EQ(r.accuracy(), double(r.confusion.trace()) / double(r.confusion.total()));
}

TEST(Metrics, UntrainedClassifierIsNearChance) {
  const auto split = desk_split(200, 8);
  const auto r = baseline_accuracy(split, small_classifier(4), quick(0));
  EXPECT_NEAR(r.accuracy(), 0.25, 0.05);
}

TEST(Metrics, ReplayedTrainingDataMatchesBaseline) {
  const auto split = desk_split(60, 9);
  const auto spec = small_classifier(4);
  const auto cfg = quick();
  const auto base = baseline_accuracy(split, spec, cfg);
  const auto replay = gan_train_score(as_synthetic(split.train), split.test, spec, cfg);
  EXPECT_NEAR(replay.accuracy(), base.accuracy(), 0.01);
}

TEST(Metrics, GanTestOnOwnTrainingSetIsTrainAccuracy) {
  const auto split = desk_split(60, 10);
  const auto spec = small_classifier(4);
  const auto cfg = quick();
  const auto params = train::train_classifier(split.train, spec, cfg.classifier);
  const auto r = gan_test_score(split.train, as_synthetic(split.train), spec, cfg);
  EXPECT_DOUBLE_EQ(r.accuracy(), train::classifier_accuracy(spec, params, split.train));
}

TEST(Metrics, ShuffledLabelsGanTestIsNearChance) {
  const auto split = desk_split(300, 11);  // 1,200 samples
  const auto spec = small_classifier(4);
  auto shuffled = as_synthetic(split.train);
  Rng rng(11, "shuffle-labels");
  rng.shuffle(std::span<int>(shuffled.labels));
  const auto r = gan_test_score(split.train, shuffled, spec, MetricConfig{});
  EXPECT_NEAR(r.accuracy(), 0.25, 0.03);
}

TEST(Metrics, ConstantSyntheticTeachesNoClassInformation) {
  // Every synthetic sample is the same input, whatever its label: the
  // classifier can only learn the label prior.
  const auto split = desk_split(40, 12);
  const auto spec = small_classifier(4);
  auto syn = as_synthetic(split.train);
  const std::size_t f = syn.features();
  for (std::size_t i = 0; i < syn.size(); ++i) {
    std::copy_n(split.train.row(0).begin(), f, syn.amplitudes.data().begin() + static_cast<std::ptrdiff_t>(i * f));
  }
  // Long enough for the softmax to settle on the prior.
  const auto params = train::train_classifier(syn, spec, quick(200).classifier);
  const auto logits = models::classifier_logits(spec, params, syn.amplitudes);
  const auto counts = syn.class_counts();
  double z = 0.0;
  for (std::size_t c = 0; c < 4; ++c) z += std::exp(double(logits[c]));
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(std::exp(double(logits[c])) / z, double(counts[c]) / double(syn.size()), 0.02);
  }
}

TEST(Metrics, GanTestCapSubsamples) {
  const auto split = desk_split(40, 13);
  const auto spec = small_classifier(4);
  const auto syn = as_synthetic(split.train);
  const auto r = gan_test_score(split.train, syn, spec, quick(1), 40);
  EXPECT_EQ(r.test_size(), 40u);
  EXPECT_EQ(gan_test_score(split.train, syn, spec, quick(1), 0).test_size(), syn.size());
}

TEST(Metrics, AugmentedWithEmptySyntheticIsBaseline) {
  const auto split = desk_split(40, 14);
  const auto spec = small_classifier(4);
  const auto cfg = quick(3);
  const auto empty = data::empty_batch(8, 10, 4);
  EXPECT_EQ(augmented_accuracy(split, empty, spec, cfg), baseline_accuracy(split, spec, cfg));
}

TEST(Metrics, AugmentedReplayNearBaseline) {
  const auto split = desk_split(200, 15);
  const auto spec = small_classifier(4);
  const MetricConfig cfg;
  const auto base = baseline_accuracy(split, spec, cfg);
  const auto aug = augmented_accuracy(split, as_synthetic(split.train), spec, cfg);
  EXPECT_EQ(aug.train_size, 2 * split.train.size());
  EXPECT_NEAR(aug.accuracy(), base.accuracy(), 0.01);
}

TEST(Metrics, ContractErrors) {
  const auto split = desk_split(20, 16);
  const auto spec = small_classifier(4);
  const auto empty = data::empty_batch(8, 10, 4);
  EXPECT_THROW(gan_train_score(as_synthetic(split.train), empty, spec, quick(1)), ContractError);
  EXPECT_THROW(gan_train_score(empty, split.test, spec, quick(1)), ContractError);
  EXPECT_THROW(gan_test_score(split.train, empty, spec, quick(1)), ContractError);
  EXPECT_THROW(augmented_accuracy(split, as_synthetic(data::normalize(split.train)), spec, quick(1)),
               ContractError);
  data::SynthCorpusSpec other;
  other.per_class = 5;
  other.num_classes = 3;
  EXPECT_THROW(gan_train_score(data::synth_corpus(other), split.test, spec, quick(1)), ContractError);
}

TEST(Metrics, Deterministic) {
  const auto split = desk_split(30, 17);
  const auto spec = small_classifier(4);
  const auto cfg = quick(2);
  EXPECT_EQ(baseline_accuracy(split, spec, cfg), baseline_accuracy(split, spec, cfg));
}

// ---- Diversity -----------------------------------------------------------

data::CsiBatch gaussian_batch(std::size_t per_class, std::size_t k, std::size_t a, std::size_t t,
                              std::uint64_t seed) {
  Rng rng(seed, "gaussian-batch");
  ad::Tensor rows(ad::Shape{per_class * k, a * t});
  for (float& v : rows.data()) v = rng.normal();
  std::vector<int> labels(per_class * k);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % k);
  return data::make_batch(rows, labels, a, t, k, data::Source::synthetic);
}

TEST(Diversity, IidGaussianDistance) {
  const auto d = diversity_metrics(gaussian_batch(200, 2, 10, 10, 1));
  ASSERT_EQ(d.size(), 2u);
  for (const auto& c : d) {
    EXPECT_EQ(c.status, DiversityStatus::ok);
    EXPECT_NEAR(c.mean_pairwise_l2, std::sqrt(200.0), 0.1 * std::sqrt(200.0));
    EXPECT_NEAR(c.mean_feature_std(), 1.0, 0.1);
    EXPECT_EQ(c.count, 200u);
    EXPECT_EQ(c.used, 200u);
  }
}

TEST(Diversity, IdenticalClassCollapses) {
  auto b = gaussian_batch(5, 2, 2, 3, 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.labels[i] == 1) std::fill_n(b.amplitudes.data().begin() + static_cast<std::ptrdiff_t>(i * 6), 6, 3.0f);
  }
  const auto d = diversity_metrics(b);
  EXPECT_EQ(d[0].status, DiversityStatus::ok);
  EXPECT_EQ(d[1].status, DiversityStatus::collapsed);
  EXPECT_EQ(d[1].mean_pairwise_l2, 0.0);
  for (double s : d[1].feature_std) EXPECT_EQ(s, 0.0);
}

TEST(Diversity, SingleSampleIsInsufficient) {
  const auto b = gaussian_batch(1, 3, 2, 2, 3);
  for (const auto& c : diversity_metrics(b)) {
    EXPECT_EQ(c.status, DiversityStatus::insufficient);
    EXPECT_EQ(c.count, 1u);
  }
}

TEST(Diversity, PairSamplingCap) {
  const auto d = diversity_metrics(gaussian_batch(50, 1, 3, 3, 4), 10);
  EXPECT_EQ(d[0].used, 10u);
  EXPECT_EQ(d[0].count, 50u);
}

// ---- Reports -------------------------------------------------------------

MetricResult fake_metric(std::size_t k, std::size_t correct, std::size_t wrong, std::size_t train) {
  MetricResult m;
  m.confusion = ConfusionMatrix(k);
  m.confusion.at(0, 0) = correct;
  m.confusion.at(1, 0) = wrong;
  m.train_size = train;
  return m;
}

EvalReport sample_report() {
  ReportInputs in;
  in.gan_train = fake_metric(3, 7, 1, 30);
  in.gan_test = fake_metric(3, 5, 5, 31);
  in.baseline = fake_metric(3, 9, 2, 32);
  in.augmented = fake_metric(3, 1, 2, 33);
  in.diversity = diversity_metrics(gaussian_batch(4, 3, 2, 2, 5));
  in.config = {{"train.seed", "3"}, {"train.lr", "0.0003"}, {"note", "a = b"}};
  return build_report("user1", std::move(in));
}

TEST(Report, BuildValidatesClassCount) {
  ReportInputs in;
  in.gan_train = fake_metric(3, 1, 1, 1);
  in.baseline = fake_metric(4, 1, 1, 1);
  EXPECT_THROW(build_report("u", in), ContractError);
  EXPECT_THROW(build_report("u", ReportInputs{}), ContractError);
  ReportInputs bad_user;
  bad_user.baseline = fake_metric(3, 1, 1, 1);
  EXPECT_THROW(build_report("a,b", bad_user), ContractError);
}

TEST(Report, TableUsesColumnOrderAndEchoesConfig) {
  const auto r = sample_report();
  EXPECT_EQ(r.config[0], (std::pair<std::string, std::string>{"train.seed", "3"}));
  const std::string table = render_table({r});
  const auto a = table.find("GAN-train"), b = table.find("GAN-test"), c = table.find("Baseline Acc."),
             d = table.find("cWGAN Acc.");
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_LT(c, d);
  EXPECT_NE(table.find("87.5"), std::string::npos);
  EXPECT_NE(table.find("81.8"), std::string::npos);
}

TEST(Report, MetricsCsvLayout) {
  ReportInputs in;
  in.baseline = fake_metric(2, 3, 1, 10);
  const auto r = build_report("u2", in);
  EXPECT_EQ(metrics_csv({r}), "metric,user,value\nnum_classes,u2,2\nbaseline_acc,u2,0.75\nbaseline_acc_train_size,u2,10\n");
}

TEST(Report, DirectoryRoundTrip) {
  TempDir dir;
  const auto r = sample_report();
  write_report(r, dir.path());
  for (const char* f : {"report.txt", "metrics.csv", "confusion_gan_train.csv", "confusion_augmented_acc.csv",
                        "diversity.csv", "echo.ini"}) {
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  }
  EXPECT_EQ(read_report(dir.path()), r);
}

TEST(Report, BaselineOnlyRoundTrip) {
  TempDir dir;
  ReportInputs in;
  in.baseline = fake_metric(4, 2, 2, 8);
  const auto r = build_report("solo", in);
  write_report(r, dir.path());
  EXPECT_FALSE(fs::exists(dir.path() / "confusion_gan_train.csv"));
  const auto back = read_report(dir.path());
  EXPECT_EQ(back, r);
  EXPECT_FALSE(back.gan_train.has_value());
  EXPECT_NE(render_table({back}).find('-'), std::string::npos);
}

TEST(Report, CorruptFilesAreFormatErrors) {
  TempDir dir;
  write_report(sample_report(), dir.path());
  {
    std::ofstream out(dir.path() / "metrics.csv", std::ios::app);
    out << "gan_train,user1,0.1\n";
  }
  EXPECT_THROW(read_report(dir.path()), FormatError);
  write_report(sample_report(), dir.path());
  {
    std::ofstream out(dir.path() / "confusion_gan_test.csv", std::ios::trunc);
    out << "true\\pred,0,1,2\n0,9,0,0\n1,0,0,0\n2,0,0,0\n";
  }
  EXPECT_THROW(read_report(dir.path()), FormatError);
  fs::remove(dir.path() / "metrics.csv");
  EXPECT_THROW(read_report(dir.path()), IoError);
}

// ---- Plots ---------------------------------------------------------------

TEST(Plots, LossCurveSvg) {
  train::TrainLog log;
  for (std::size_t i = 1; i <= 5; ++i) log.rows.push_back({i, 0.5 * double(i), -double(i), {}, {}, {}});
  const auto svg = loss_curve_svg(log);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("data-series=\"gen_loss\""), std::string::npos);
  EXPECT_NE(svg.find("data-series=\"critic_loss\""), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NO_THROW(loss_curve_svg(train::TrainLog{}));
}

TEST(Plots, MetricsBarsEscapeNames) {
  ReportInputs in;
  in.baseline = fake_metric(2, 1, 1, 1);
  const auto svg = metrics_bar_svg({build_report("a<b", in)});
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_EQ(svg.find("a<b"), std::string::npos);
  EXPECT_NE(svg.find("data-metric=\"baseline_acc\""), std::string::npos);
  EXPECT_EQ(svg.find("data-metric=\"gan_train\""), std::string::npos);
}

}  // namespace
}  // namespace csi4
