#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "csi4/autodiff/tensor.hpp"

namespace csi4::data {

enum class Source : std::uint8_t { real = 0, synthetic = 1 };

const char* to_string(Source s);

// Affine range used by min-max normalization.
struct NormRange {
  float min = 0.0f;
  float max = 0.0f;
  friend bool operator==(const NormRange&, const NormRange&) = default;
};

// Labeled CSI amplitude samples, amplitudes shaped [m, antennas, time].
// Invariants (checked by validate()): labels.size() == sources.size() == m,
// labels in [0, num_classes), and when normalized a norm range is present
// and every value lies in [-1, 1].
struct CsiBatch {
  ad::Tensor amplitudes{ad::Shape{0, 1, 1}};
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::optional<int> user_id;
  bool normalized = false;
  std::optional<NormRange> norm;
  std::vector<Source> sources;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t antennas() const { return amplitudes.dim(1); }
  std::size_t time() const { return amplitudes.dim(2); }
  std::size_t features() const { return antennas() * time(); }

  std::span<const float> row(std::size_t i) const {
    return amplitudes.data().subspan(i * features(), features());
  }

  // Amplitudes reshaped to [m, antennas * time].
  ad::Tensor flat() const;
  std::vector<std::size_t> class_counts() const;

  void validate() const;

  friend bool operator==(const CsiBatch&, const CsiBatch&) = default;
};

// Empty batch with the given geometry.
CsiBatch empty_batch(std::size_t antennas, std::size_t time, std::size_t num_classes);

// Builds a batch from flattened rows [m, antennas*time] (or [m, A, T]).
CsiBatch make_batch(const ad::Tensor& rows, std::vector<int> labels, std::size_t antennas,
                    std::size_t time, std::size_t num_classes, Source source);

// Rows at `indices`, in the given order.
CsiBatch subset(const CsiBatch& batch, std::span<const std::size_t> indices);

}  // namespace csi4::data
