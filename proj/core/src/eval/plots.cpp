#include "csi4/eval/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace csi4::eval {

namespace {

constexpr double kWidth = 720, kHeight = 360;
constexpr double kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void header(std::ostringstream& out, const char* title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<title>" << title << "</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string loss_curve_svg(const train::TrainLog& log) {
  std::ostringstream out;
  header(out, "Training losses");
  const auto& rows = log.rows;
  double lo = 0.0, hi = 0.0;
  std::size_t first = 0, last = 0;
  if (!rows.empty()) {
    lo = hi = rows.front().gen_loss;
    first = rows.front().iter;
    last = rows.back().iter;
    for (const auto& r : rows) {
      lo = std::min({lo, r.gen_loss, r.critic_loss});
      hi = std::max({hi, r.gen_loss, r.critic_loss});
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double span_x = last > first ? double(last - first) : 1.0;
  auto x = [&](std::size_t it) { return kLeft + (double(it - first) / span_x) * (kWidth - kLeft - kRight); };
  auto y = [&](double v) { return kHeight - kBottom - (v - lo) / (hi - lo) * (kHeight - kTop - kBottom); };

  auto series = [&](auto get, const char* color, const char* name) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" data-series=\"" << name
        << "\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) out << ' ';
      out << num(x(rows[i].iter)) << ',' << num(y(get(rows[i])));
    }
    out << "\"/>\n";
  };
  series([](const train::LogRow& r) { return r.gen_loss; }, "#1f77b4", "gen_loss");
  series([](const train::LogRow& r) { return r.critic_loss; }, "#d62728", "critic_loss");

  out << "<text x=\"" << kLeft << "\" y=\"" << kTop - 10 << "\" font-size=\"12\">" << label_num(hi) << "</text>\n"
      << "<text x=\"" << kLeft << "\" y=\"" << kHeight - kBottom + 15 << "\" font-size=\"12\">"
      << label_num(lo) << " @ iter " << first << "</text>\n"
      << "<text x=\"" << kWidth - kRight - 80 << "\" y=\"" << kHeight - kBottom + 15
      << "\" font-size=\"12\">iter " << last << "</text>\n"
      << "<text x=\"" << kWidth - 200 << "\" y=\"" << kTop - 10
      << "\" font-size=\"12\" fill=\"#1f77b4\">gen_loss</text>\n"
      << "<text x=\"" << kWidth - 120 << "\" y=\"" << kTop - 10
      << "\" font-size=\"12\" fill=\"#d62728\">critic_loss</text>\n"
      << "</svg>\n";
  return out.str();
}

std::string metrics_bar_svg(const std::vector<EvalReport>& reports) {
  static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  std::ostringstream out;
  header(out, "Evaluation metrics");
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double group_w = reports.empty() ? plot_w : plot_w / double(reports.size());
  const double bar_w = group_w / 5.0;
  for (std::size_t g = 0; g < reports.size(); ++g) {
    const auto& r = reports[g];
    const double gx = kLeft + double(g) * group_w + bar_w / 2.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& m = metric(r, i);
      if (!m) continue;
      const double h = m->accuracy() * plot_h;
      out << "<rect x=\"" << num(gx + double(i) * bar_w) << "\" y=\"" << num(kHeight - kBottom - h)
          << "\" width=\"" << num(bar_w * 0.9) << "\" height=\"" << num(h) << "\" fill=\"" << colors[i]
          << "\" data-metric=\"" << kMetricKeys[i] << "\" data-user=\"" << xml_escape(r.user)
          << "\"><title>" << kMetricTitles[i] << ' ' << num(100.0 * m->accuracy()) << "%</title></rect>\n";
    }
    out << "<text x=\"" << num(gx) << "\" y=\"" << kHeight - kBottom + 15 << "\" font-size=\"12\">"
        << xml_escape(r.user) << "</text>\n";
  }
  for (std::size_t i = 0; i < 4; ++i) {
    out << "<text x=\"" << num(kLeft + 10 + double(i) * 150) << "\" y=\"" << kTop - 10
        << "\" font-size=\"12\" fill=\"" << colors[i] << "\">" << kMetricTitles[i] << "</text>\n";
  }
  out << "<text x=\"5\" y=\"" << kTop + 4 << "\" font-size=\"12\">100%</text>\n"
      << "<text x=\"5\" y=\"" << kHeight - kBottom << "\" font-size=\"12\">0%</text>\n"
      << "</svg>\n";
  return out.str();
}

}  // namespace csi4::eval
