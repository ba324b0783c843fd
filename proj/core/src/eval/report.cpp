#include "csi4/eval/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include "csi4/common/errors.hpp"

namespace csi4::eval {

namespace fs = std::filesystem;

namespace {

std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError("expected a number, got '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError("expected a count, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string percent(const std::optional<MetricResult>& m) {
  if (!m) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << 100.0 * m->accuracy();
  return out.str();
}

}  // namespace

const std::optional<MetricResult>& metric(const EvalReport& r, std::size_t index) {
  switch (index) {
    case 0: return r.gan_train;
    case 1: return r.gan_test;
    case 2: return r.baseline;
    case 3: return r.augmented;
  }
  throw ContractError("metric index out of range");
}

std::optional<MetricResult>& metric(EvalReport& r, std::size_t index) {
  return const_cast<std::optional<MetricResult>&>(metric(std::as_const(r), index));
}

void EvalReport::validate() const {
  if (user.find_first_of(",\n\r") != std::string::npos) {
    throw ContractError("report user '" + user + "' contains a comma or newline");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& m = metric(*this, i);
    if (!m) continue;
    if (m->confusion.num_classes() != num_classes) {
      throw ContractError(std::string(kMetricKeys[i]) + " confusion is " +
                          std::to_string(m->confusion.num_classes()) + " classes, report has " +
                          std::to_string(num_classes));
    }
    const double a = m->accuracy();
    if (!(a >= 0.0 && a <= 1.0)) throw ContractError(std::string(kMetricKeys[i]) + " outside [0, 1]");
  }
  if (!diversity.empty() && diversity.size() != num_classes) {
    throw ContractError("diversity covers " + std::to_string(diversity.size()) + " classes, report has " +
                        std::to_string(num_classes));
  }
  for (const auto& [k, v] : config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractError("config echo entry '" + k + "' cannot be serialized");
    }
  }
}

EvalReport build_report(std::string user, ReportInputs in) {
  EvalReport r;
  r.user = std::move(user);
  r.gan_train = std::move(in.gan_train);
  r.gan_test = std::move(in.gan_test);
  r.baseline = std::move(in.baseline);
  r.augmented = std::move(in.augmented);
  r.diversity = std::move(in.diversity);
  r.config = std::move(in.config);
  std::optional<std::size_t> k;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& m = metric(r, i);
    if (!m) continue;
    const std::size_t mk = m->confusion.num_classes();
    if (k && *k != mk) throw ContractError("metrics disagree on the class count");
    k = mk;
  }
  if (!r.diversity.empty()) {
    if (k && *k != r.diversity.size()) throw ContractError("diversity and metrics disagree on the class count");
    k = r.diversity.size();
  }
  if (!k) throw ContractError("report has no metrics");
  r.num_classes = *k;
  r.validate();
  return r;
}

std::string render_table(const std::vector<EvalReport>& reports) {
  std::size_t name_w = 4;
  for (const auto& r : reports) name_w = std::max(name_w, r.user.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_w)) << "user";
  for (const char* t : kMetricTitles) out << "  " << std::right << std::setw(13) << t;
  out << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.user;
    for (std::size_t i = 0; i < 4; ++i) out << "  " << std::right << std::setw(13) << percent(metric(r, i));
    out << '\n';
  }
  return out.str();
}

std::string metrics_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "metric,user,value\n";
  for (const auto& r : reports) {
    out << "num_classes," << r.user << ',' << r.num_classes << '\n';
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& m = metric(r, i);
      if (!m) continue;
      out << kMetricKeys[i] << ',' << r.user << ',' << exact(m->accuracy()) << '\n';
      out << kMetricKeys[i] << "_train_size," << r.user << ',' << m->train_size << '\n';
    }
  }
  return out.str();
}

void write_report(const EvalReport& report, const fs::path& dir) {
  report.validate();
  fs::create_directories(dir);
  write_text(dir / "report.txt", render_table({report}));
  write_text(dir / "metrics.csv", metrics_csv({report}));
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& m = metric(report, i);
    const fs::path path = dir / (std::string("confusion_") + kMetricKeys[i] + ".csv");
    if (m) {
      write_text(path, m->confusion.to_csv());
    } else {
      fs::remove(path);
    }
  }
  std::ostringstream div;
  div << "label,count,used,mean_pairwise_l2,status,feature_std\n";
  for (const auto& d : report.diversity) {
    div << d.label << ',' << d.count << ',' << d.used << ',' << exact(d.mean_pairwise_l2) << ','
        << to_string(d.status);
    for (double s : d.feature_std) div << ',' << exact(s);
    div << '\n';
  }
  write_text(dir / "diversity.csv", div.str());
  std::ostringstream echo;
  for (const auto& [k, v] : report.config) echo << k << " = " << v << '\n';
  write_text(dir / "echo.ini", echo.str());
}

EvalReport read_report(const fs::path& dir) {
  EvalReport r;
  std::istringstream metrics(read_text(dir / "metrics.csv"));
  std::string line;
  if (!std::getline(metrics, line) || line != "metric,user,value") {
    throw FormatError(dir.string() + "/metrics.csv: bad header");
  }
  bool have_k = false, have_user = false;
  std::map<std::string, std::pair<double, std::size_t>> values;  // accuracy, train_size
  std::map<std::string, int> seen;
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    const auto f = fields(line);
    if (f.size() != 3) throw FormatError("metrics.csv: expected 3 fields in '" + line + "'");
    if (have_user && f[1] != r.user) throw FormatError("metrics.csv mixes users");
    r.user = f[1];
    have_user = true;
    if (f[0] == "num_classes") {
      r.num_classes = parse_size(f[2]);
      have_k = true;
      continue;
    }
    bool known = false;
    for (const char* key : kMetricKeys) {
      if (f[0] == key) {
        values[key].first = parse_double(f[2]);
        seen[key] |= 1;
        known = true;
      } else if (f[0] == std::string(key) + "_train_size") {
        values[key].second = parse_size(f[2]);
        seen[key] |= 2;
        known = true;
      }
    }
    if (!known) throw FormatError("metrics.csv: unknown metric '" + f[0] + "'");
  }
  if (!have_k) throw FormatError("metrics.csv: missing num_classes");
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string key = kMetricKeys[i];
    if (!seen.count(key)) continue;
    if (seen[key] != 3) throw FormatError("metrics.csv: incomplete rows for " + key);
    MetricResult m;
    m.confusion = ConfusionMatrix::from_csv(read_text(dir / ("confusion_" + key + ".csv")));
    m.train_size = values[key].second;
    if (m.accuracy() != values[key].first) {
      throw FormatError(key + " in metrics.csv disagrees with its confusion matrix");
    }
    metric(r, i) = std::move(m);
  }

  std::istringstream div(read_text(dir / "diversity.csv"));
  if (!std::getline(div, line) || line != "label,count,used,mean_pairwise_l2,status,feature_std") {
    throw FormatError("diversity.csv: bad header");
  }
  while (std::getline(div, line)) {
    if (line.empty()) continue;
    const auto f = fields(line);
    if (f.size() < 5) throw FormatError("diversity.csv: short row '" + line + "'");
    ClassDiversity d;
    d.label = static_cast<int>(parse_size(f[0]));
    d.count = parse_size(f[1]);
    d.used = parse_size(f[2]);
    d.mean_pairwise_l2 = parse_double(f[3]);
    d.status = parse_diversity_status(f[4]);
    for (std::size_t j = 5; j < f.size(); ++j) d.feature_std.push_back(parse_double(f[j]));
    r.diversity.push_back(std::move(d));
  }

  std::istringstream echo(read_text(dir / "echo.ini"));
  while (std::getline(echo, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("echo.ini: expected 'key = value' in '" + line + "'");
    r.config.emplace_back(trim(line.substr(0, eq)), line.substr(eq + 3));
  }
  try {
    r.validate();
  } catch (const ContractError& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return r;
}

}  // namespace csi4::eval
