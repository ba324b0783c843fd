#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace csi4 {

// Portable counter-based generator. The i-th draw of a stream is the
// SplitMix64 finalizer applied to key + i * golden-gamma, so the sequence is
// a pure function of (seed, purpose, i) with integer arithmetic only.
// Every stochastic operation in the project draws from a stream keyed by
// (seed, purpose tag); distinct purposes give statistically independent
// streams.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 24 bits of resolution.
  float uniform();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform_double();
  // Standard normal via Box-Muller (one draw per call).
  float normal();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Child stream derived from this stream's key and a sub-purpose. Does not
  // advance the parent.
  Rng fork(std::string_view purpose) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  explicit Rng(std::uint64_t key) : key_(key) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace csi4
