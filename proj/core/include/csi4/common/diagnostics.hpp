#pragma once

#include <string>
#include <vector>

namespace csi4 {

// Records a non-fatal warning. Warnings go to stderr unless a
// WarningCapture is active on the calling thread, in which case they are
// collected there instead.
void warn(std::string message);

// RAII collector for warnings emitted on the current thread. Captures nest;
// the innermost one receives the messages.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  friend void warn(std::string message);
  std::vector<std::string> messages_;
  WarningCapture* previous_;
};

}  // namespace csi4
