#include "csi4/data/csi_batch.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "csi4/common/errors.hpp"

namespace csi4::data {

const char* to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }

ad::Tensor CsiBatch::flat() const {
  return amplitudes.reshaped({size(), features()});
}

std::vector<std::size_t> CsiBatch::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < num_classes) ++counts[y];
  }
  return counts;
}

void CsiBatch::validate() const {
  if (amplitudes.rank() != 3) {
    throw DimensionError("CSI amplitudes must be [m, antennas, time], got " +
                         ad::to_string(amplitudes.shape()));
  }
  if (amplitudes.dim(0) != labels.size()) {
    throw DimensionError("batch has " + std::to_string(amplitudes.dim(0)) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (sources.size() != labels.size()) {
    throw DimensionError("provenance length does not match sample count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(num_classes) + ")");
    }
  }
  if (normalized) {
    if (!norm) throw ContractError("normalized batch without a normalization range");
    for (float v : amplitudes.data()) {
      if (!(v >= -1.0f && v <= 1.0f)) throw ContractError("normalized batch has values outside [-1, 1]");
    }
  }
}

CsiBatch empty_batch(std::size_t antennas, std::size_t time, std::size_t num_classes) {
  CsiBatch b;
  b.amplitudes = ad::Tensor(ad::Shape{0, antennas, time});
  b.num_classes = num_classes;
  return b;
}

CsiBatch make_batch(const ad::Tensor& rows, std::vector<int> labels, std::size_t antennas,
                    std::size_t time, std::size_t num_classes, Source source) {
  if (rows.rank() == 0 || rows.size() != labels.size() * antennas * time) {
    throw DimensionError("cannot view " + ad::to_string(rows.shape()) + " as " +
                         std::to_string(labels.size()) + " samples of " +
                         std::to_string(antennas) + "x" + std::to_string(time));
  }
  CsiBatch b;
  b.amplitudes = rows.reshaped({labels.size(), antennas, time});
  b.num_classes = num_classes;
  b.sources.assign(labels.size(), source);
  b.labels = std::move(labels);
  b.validate();
  return b;
}

CsiBatch subset(const CsiBatch& batch, std::span<const std::size_t> indices) {
  const std::size_t f = batch.features();
  CsiBatch out = empty_batch(batch.antennas(), batch.time(), batch.num_classes);
  out.user_id = batch.user_id;
  out.normalized = batch.normalized;
  out.norm = batch.norm;
  out.amplitudes = ad::Tensor(ad::Shape{indices.size(), batch.antennas(), batch.time()});
  out.labels.reserve(indices.size());
  out.sources.reserve(indices.size());
  auto dst = out.amplitudes.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= batch.size()) throw ContractError("subset index out of range");
    std::copy_n(batch.row(src).begin(), f, dst.begin() + i * f);
    out.labels.push_back(batch.labels[src]);
    out.sources.push_back(batch.sources[src]);
  }
  return out;
}

}  // namespace csi4::data
