#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csi4/eval/metrics.hpp"

namespace csi4::eval {

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct EvalReport {
  std::string user;
  std::size_t num_classes = 0;
  std::optional<MetricResult> gan_train;
  std::optional<MetricResult> gan_test;
  std::optional<MetricResult> baseline;
  std::optional<MetricResult> augmented;
  std::vector<ClassDiversity> diversity;
  ConfigEcho config;

  // Fractions in [0, 1], confusion matrices K x K, user free of commas and
  // newlines. Violations are ContractErrors.
  void validate() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct ReportInputs {
  std::optional<MetricResult> gan_train;
  std::optional<MetricResult> gan_test;
  std::optional<MetricResult> baseline;
  std::optional<MetricResult> augmented;
  std::vector<ClassDiversity> diversity;
  ConfigEcho config;
};

// Class count is taken from the inputs; disagreement is a ContractError.
EvalReport build_report(std::string user, ReportInputs inputs);

// Metric keys in table order.
inline constexpr const char* kMetricKeys[] = {"gan_train", "gan_test", "baseline_acc", "augmented_acc"};
inline constexpr const char* kMetricTitles[] = {"GAN-train", "GAN-test", "Baseline Acc.", "cWGAN Acc."};

const std::optional<MetricResult>& metric(const EvalReport& r, std::size_t index);
std::optional<MetricResult>& metric(EvalReport& r, std::size_t index);

// One row per report in the four-column table layout; absent values are "-".
std::string render_table(const std::vector<EvalReport>& reports);

// metric,user,value rows (header included).
std::string metrics_csv(const std::vector<EvalReport>& reports);

// report.txt, metrics.csv, confusion_<metric>.csv, diversity.csv, echo.ini.
void write_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport read_report(const std::filesystem::path& dir);

}  // namespace csi4::eval
