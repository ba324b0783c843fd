#pragma once

#include <cstdint>
#include <filesystem>

#include "csi4/data/csi_batch.hpp"

namespace csi4::data {

// CSI4DATA container, all integers little-endian:
//
//   magic "CSI4DATA" | version u16 | m u32 | antennas u16 | time u16 |
//   K u16 | user_id i16 (-1 = none) | normalized u8 | min f32 | max f32 |
//   m*antennas*time f32 amplitudes | m u16 labels
//
// min/max are zero when the batch carries no normalization range.
inline constexpr char kDataMagic[] = "CSI4DATA";
inline constexpr std::uint16_t kDataVersion = 1;

void save_csi(const CsiBatch& batch, const std::filesystem::path& path);
// FormatError on bad magic/version or trailing bytes, IoError on truncation,
// DataError on labels >= K. Every sample is tagged with `source`.
CsiBatch load_csi(const std::filesystem::path& path, Source source = Source::real);

// Maps amplitudes onto [-1, 1] with the batch's global min and max. A
// constant batch maps to zeros and records a warning. Normalizing twice is a
// ContractError.
CsiBatch normalize(const CsiBatch& batch);
// Same affine map with an externally supplied range; results are clamped to
// [-1, 1].
CsiBatch normalize_with(const CsiBatch& batch, NormRange range);
// Inverse of normalize(). Requires a normalized batch.
CsiBatch denormalize(const CsiBatch& batch);

struct SplitPair {
  CsiBatch train;
  CsiBatch test;
  double ratio = 0.75;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Seeded shuffle then split; train gets round(ratio * m) samples. Stratified
// mode splits every class separately (largest-remainder quotas) and needs at
// least two samples per present class. Both parts keep the input's order.
SplitPair split(const CsiBatch& batch, double ratio, std::uint64_t seed, bool stratified);

struct SynthCorpusSpec {
  std::size_t num_classes = 4;
  std::size_t antennas = 8;
  std::size_t time = 10;
  std::size_t per_class = 200;
  double class_separation = 1.0;
  double noise_sigma = 0.25;
  std::uint64_t seed = 7;

  void validate() const;
};

// Per-class smooth template (a few low-frequency sinusoids over the
// antenna x time grid, scaled by class_separation) on a constant baseline,
// plus i.i.d. Gaussian noise. Labels cycle 0..K-1.
CsiBatch synth_corpus(const SynthCorpusSpec& spec);

// Concatenation. Geometry, class count and normalization state (including
// the range) must match.
CsiBatch merge(const CsiBatch& real, const CsiBatch& synthetic);

// Per-class uniform subsample keeping at most `cap` samples overall. A cap
// at or above the batch size returns the batch unchanged.
CsiBatch balanced_subsample(const CsiBatch& batch, std::size_t cap, std::uint64_t seed);

// Audit CSV: index,label,source,user
void write_provenance_csv(const CsiBatch& batch, const std::filesystem::path& path);

// Ingestion adapter for exported real datasets: one sample per CSV line,
// `label,v_0,...,v_{A*T-1}` with values in antenna-major order. Blank lines
// and lines starting with '#' are skipped.
CsiBatch import_csv(const std::filesystem::path& path, std::size_t antennas, std::size_t time,
                    std::size_t num_classes, std::optional<int> user_id);

}  // namespace csi4::data
