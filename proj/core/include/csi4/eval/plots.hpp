#pragma once

#include <string>
#include <vector>

#include "csi4/eval/report.hpp"
#include "csi4/training/trainer.hpp"

namespace csi4::eval {

// Line chart of generator and critic/discriminator loss per iteration.
std::string loss_curve_svg(const train::TrainLog& log);

// Grouped bar chart of the four metrics per report; absent metrics leave a gap.
std::string metrics_bar_svg(const std::vector<EvalReport>& reports);

std::string xml_escape(const std::string& text);

}  // namespace csi4::eval
