#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace csi4::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitData = 4;

// Runs one command line (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Worker threads for fan-out work: CSI4_THREADS if set, else the hardware
// concurrency, at least 1.
unsigned worker_threads();

}  // namespace csi4::cli
