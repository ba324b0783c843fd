#include "csi4/common/diagnostics.hpp"

#include <iostream>

namespace csi4 {
namespace {
thread_local WarningCapture* current_capture = nullptr;
}

WarningCapture::WarningCapture() : previous_(current_capture) { current_capture = this; }

WarningCapture::~WarningCapture() { current_capture = previous_; }

bool WarningCapture::contains(const std::string& needle) const {
  for (const auto& m : messages_) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

void warn(std::string message) {
  if (current_capture != nullptr) {
    current_capture->messages_.push_back(std::move(message));
    return;
  }
  std::cerr << "warning: " << message << '\n';
}

}  // namespace csi4
