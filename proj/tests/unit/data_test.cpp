#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "csi4/common/diagnostics.hpp"
#include "csi4/common/errors.hpp"
#include "csi4/common/rng.hpp"
#include "csi4/data/dataset.hpp"

namespace csi4 {
namespace {

using ad::Shape;
using ad::Tensor;
using namespace data;

// Content hash of one sample row (FNV-1a over the raw float bytes).
std::uint64_t row_checksum(std::span<const float> row) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (float v : row) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::multiset<std::pair<std::uint64_t, int>> tagged(const CsiBatch& b) {
  std::multiset<std::pair<std::uint64_t, int>> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace(row_checksum(b.row(i)), b.labels[i]);
  return out;
}

SynthCorpusSpec small_spec() {
  SynthCorpusSpec s;
  s.per_class = 25;
  return s;
}

class DataFiles : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "csi4_data_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }

  std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  void write_bytes(const std::filesystem::path& p, const std::string& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << b;
  }
};

TEST_F(DataFiles, RoundTripIsBitIdentical) {
  CsiBatch b = synth_corpus(small_spec());
  b.user_id = 3;
  save_csi(b, dir / "a.csi4");
  EXPECT_EQ(load_csi(dir / "a.csi4"), b);
  CsiBatch n = normalize(b);
  save_csi(n, dir / "n.csi4");
  EXPECT_EQ(load_csi(dir / "n.csi4"), n);
}

TEST_F(DataFiles, EmptyBatchRoundTrips) {
  CsiBatch e = empty_batch(8, 10, 4);
  save_csi(e, dir / "e.csi4");
  EXPECT_EQ(load_csi(dir / "e.csi4"), e);
}

TEST_F(DataFiles, LargeSyntheticBatchRoundTrips) {
  SynthCorpusSpec s;
  s.num_classes = 8;
  s.per_class = 3750;
  CsiBatch b = synth_corpus(s);
  ASSERT_EQ(b.size(), 30000u);
  save_csi(b, dir / "big.csi4");
  EXPECT_EQ(load_csi(dir / "big.csi4"), b);
}

TEST_F(DataFiles, FullScaleFileLoadsWithStatedDims) {
  SynthCorpusSpec s;
  s.num_classes = 8;
  s.antennas = 30;
  s.time = 50;
  s.per_class = 136;
  CsiBatch b = synth_corpus(s);
  std::vector<std::size_t> keep(1084);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  b = subset(b, keep);
  save_csi(b, dir / "full.csi4");
  CsiBatch l = load_csi(dir / "full.csi4");
  EXPECT_EQ(l.size(), 1084u);
  EXPECT_EQ(l.antennas(), 30u);
  EXPECT_EQ(l.time(), 50u);
  EXPECT_EQ(l.num_classes, 8u);
}

TEST_F(DataFiles, OverwriteTruncates) {
  save_csi(synth_corpus(small_spec()), dir / "o.csi4");
  CsiBatch small = subset(synth_corpus(small_spec()), std::vector<std::size_t>{0, 1});
  save_csi(small, dir / "o.csi4");
  EXPECT_EQ(load_csi(dir / "o.csi4"), small);
  EXPECT_EQ(std::filesystem::file_size(dir / "o.csi4"), 31u + 2 * 80 * 4 + 2 * 2);
}

TEST_F(DataFiles, HeaderLayoutIsLittleEndian) {
  CsiBatch b = subset(synth_corpus(small_spec()), std::vector<std::size_t>{1});
  b.user_id = 258;
  save_csi(b, dir / "h.csi4");
  const std::string s = read_bytes(dir / "h.csi4");
  EXPECT_EQ(s.substr(0, 8), "CSI4DATA");
  auto u8 = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  EXPECT_EQ(u8(8), 1);    // version
  EXPECT_EQ(u8(10), 1);   // m
  EXPECT_EQ(u8(14), 8);   // antennas
  EXPECT_EQ(u8(16), 10);  // time
  EXPECT_EQ(u8(18), 4);   // K
  EXPECT_EQ(u8(20), 2);   // user 258 = 0x0102
  EXPECT_EQ(u8(21), 1);
  EXPECT_EQ(u8(22), 0);   // normalized
  EXPECT_EQ(u8(s.size() - 2), 1);  // label of sample 1
}

TEST_F(DataFiles, CorruptFilesRaiseTypedErrors) {
  CsiBatch b = synth_corpus(small_spec());
  save_csi(b, dir / "c.csi4");
  const std::string good = read_bytes(dir / "c.csi4");

  write_bytes(dir / "c.csi4", "XXXX" + good.substr(4));
  EXPECT_THROW(load_csi(dir / "c.csi4"), FormatError);

  std::string bad_version = good;
  bad_version[8] = 9;
  write_bytes(dir / "c.csi4", bad_version);
  EXPECT_THROW(load_csi(dir / "c.csi4"), FormatError);

  write_bytes(dir / "c.csi4", good.substr(0, good.size() - 7));
  EXPECT_THROW(load_csi(dir / "c.csi4"), IoError);

  std::string bad_label = good;
  bad_label[bad_label.size() - 2] = 4;  // K = 4
  write_bytes(dir / "c.csi4", bad_label);
  EXPECT_THROW(load_csi(dir / "c.csi4"), DataError);

  write_bytes(dir / "c.csi4", good + "junk");
  EXPECT_THROW(load_csi(dir / "c.csi4"), FormatError);

  EXPECT_THROW(load_csi(dir / "absent.csi4"), IoError);
}

TEST(Normalize, AffineEndpoints) {
  CsiBatch b = make_batch(Tensor(Shape{3, 1, 1}, std::vector<float>{0, 5, 10}), {0, 1, 0}, 1, 1, 2,
                          Source::real);
  CsiBatch n = normalize(b);
  EXPECT_EQ(n.amplitudes.storage(), (std::vector<float>{-1, 0, 1}));
  ASSERT_TRUE(n.norm.has_value());
  EXPECT_EQ(n.norm->min, 0.0f);
  EXPECT_EQ(n.norm->max, 10.0f);
  EXPECT_TRUE(n.normalized);
}

TEST(Normalize, InverseWithinTolerance) {
  CsiBatch b = synth_corpus(small_spec());
  CsiBatch n = normalize(b);
  for (float v : n.amplitudes.data()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  CsiBatch back = denormalize(n);
  const double range = double(n.norm->max) - n.norm->min;
  for (std::size_t i = 0; i < b.amplitudes.size(); ++i) {
    EXPECT_LE(std::abs(double(back.amplitudes[i]) - b.amplitudes[i]), 1e-5 * range);
  }
  EXPECT_FALSE(back.normalized);
}

TEST(Normalize, ConstantBatchGivesZerosWithWarning) {
  CsiBatch b = make_batch(Tensor(Shape{4, 2, 1}, 3.5f), {0, 1, 0, 1}, 2, 1, 2, Source::real);
  WarningCapture capture;
  CsiBatch n = normalize(b);
  EXPECT_EQ(n.amplitudes, Tensor(Shape{4, 2, 1}, 0.0f));
  EXPECT_TRUE(capture.contains("constant"));
  EXPECT_EQ(denormalize(n).amplitudes, b.amplitudes);
}

TEST(Normalize, TwiceIsContractError) {
  CsiBatch n = normalize(synth_corpus(small_spec()));
  EXPECT_THROW(normalize(n), ContractError);
  EXPECT_THROW(denormalize(synth_corpus(small_spec())), ContractError);
}

TEST(Normalize, ExternalRangeClamps) {
  CsiBatch b = make_batch(Tensor(Shape{3, 1, 1}, std::vector<float>{-5, 5, 15}), {0, 0, 0}, 1, 1, 1,
                          Source::synthetic);
  CsiBatch n = normalize_with(b, NormRange{0, 10});
  EXPECT_EQ(n.amplitudes.storage(), (std::vector<float>{-1, 0, 1}));
}

TEST(Split, FullScaleCounts) {
  SynthCorpusSpec s;
  s.num_classes = 4;
  s.per_class = 271;
  CsiBatch b = synth_corpus(s);
  ASSERT_EQ(b.size(), 1084u);
  for (bool stratified : {false, true}) {
    SplitPair p = split(b, 0.75, 1, stratified);
    EXPECT_EQ(p.train.size(), 813u);
    EXPECT_EQ(p.test.size(), 271u);
  }
}

TEST(Split, RatioBoundsAreContractErrors) {
  CsiBatch b = synth_corpus(small_spec());
  EXPECT_THROW(split(b, 1.0, 1, false), ContractError);
  EXPECT_THROW(split(b, 0.0, 1, false), ContractError);
  EXPECT_THROW(split(subset(b, std::vector<std::size_t>{0}), 0.5, 1, false), ContractError);
}

TEST(Split, SingletonClassInStratifiedModeIsDataError) {
  CsiBatch b = subset(synth_corpus(small_spec()), std::vector<std::size_t>{0, 4, 8, 1});
  EXPECT_THROW(split(b, 0.5, 1, true), DataError);
  EXPECT_NO_THROW(split(b, 0.5, 1, false));
}

TEST(Split, DeterministicDisjointAndComplete) {
  CsiBatch b = synth_corpus(small_spec());
  for (bool stratified : {false, true}) {
    SplitPair p = split(b, 0.75, 42, stratified), q = split(b, 0.75, 42, stratified);
    EXPECT_EQ(p.train_indices, q.train_indices);
    EXPECT_EQ(p.test_indices, q.test_indices);
    EXPECT_NE(p.train_indices, split(b, 0.75, 43, stratified).train_indices);
    std::vector<std::size_t> all = p.train_indices;
    all.insert(all.end(), p.test_indices.begin(), p.test_indices.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(b.size());
    std::iota(expect.begin(), expect.end(), std::size_t{0});
    EXPECT_EQ(all, expect);
    auto joined = tagged(p.train);
    for (const auto& t : tagged(p.test)) joined.insert(t);
    EXPECT_EQ(joined, tagged(b));
  }
}

TEST(Split, StratifiedKeepsProportionsWithinOneSample) {
  Rng rng(17, "unbalanced");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> keep;
    CsiBatch full = synth_corpus(SynthCorpusSpec{5, 2, 2, 40, 1.0, 0.1, 3});
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < full.size(); ++i) {
      const int c = full.labels[i];
      if (per[c] < 2 || rng.below(3) != 0) keep.push_back(i), ++per[c];
    }
    CsiBatch b = subset(full, keep);
    const double ratio = 0.3 + 0.5 * rng.uniform_double();
    SplitPair p = split(b, ratio, trial, true);
    EXPECT_EQ(p.train.size(), static_cast<std::size_t>(std::llround(ratio * double(b.size()))));
    const auto total = b.class_counts(), train = p.train.class_counts();
    for (std::size_t c = 0; c < total.size(); ++c) {
      EXPECT_LE(std::abs(double(train[c]) - ratio * double(total[c])), 1.0 + 1e-9) << "class " << c;
    }
  }
}

TEST(Synth, DefaultSpecIsBalancedAndDeterministic) {
  CsiBatch a = synth_corpus(SynthCorpusSpec{});
  EXPECT_EQ(a.size(), 800u);
  EXPECT_EQ(a.class_counts(), (std::vector<std::size_t>{200, 200, 200, 200}));
  EXPECT_EQ(a.amplitudes.shape(), (Shape{800, 8, 10}));
  EXPECT_EQ(a, synth_corpus(SynthCorpusSpec{}));
  SynthCorpusSpec other;
  other.seed = 8;
  EXPECT_NE(a.amplitudes, synth_corpus(other).amplitudes);
}

TEST(Synth, ZeroNoiseMakesClassesConstant) {
  SynthCorpusSpec s = small_spec();
  s.noise_sigma = 0.0;
  CsiBatch b = synth_corpus(s);
  for (std::size_t i = s.num_classes; i < b.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(b.row(i), b.row(i % s.num_classes)));
  }
}

TEST(Synth, ZeroSeparationMakesTemplatesIdentical) {
  SynthCorpusSpec s = small_spec();
  s.class_separation = 0.0;
  s.noise_sigma = 0.0;
  CsiBatch b = synth_corpus(s);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_TRUE(std::ranges::equal(b.row(i), b.row(0)));
}

TEST(Synth, InvalidSpecsRejected) {
  SynthCorpusSpec s;
  s.per_class = 0;
  EXPECT_THROW(synth_corpus(s), ContractError);
  s = SynthCorpusSpec{};
  s.noise_sigma = -1;
  EXPECT_THROW(synth_corpus(s), ContractError);
}

// Brute-force nearest-class-mean classifier on a held-out split.
double nearest_mean_accuracy(const CsiBatch& b, std::uint64_t seed) {
  SplitPair p = split(b, 0.75, seed, true);
  const std::size_t f = b.features();
  std::vector<std::vector<double>> means(b.num_classes, std::vector<double>(f, 0.0));
  const auto counts = p.train.class_counts();
  for (std::size_t i = 0; i < p.train.size(); ++i) {
    for (std::size_t j = 0; j < f; ++j) means[p.train.labels[i]][j] += p.train.row(i)[j];
  }
  for (std::size_t c = 0; c < means.size(); ++c) {
    for (double& v : means[c]) v /= double(counts[c]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.test.size(); ++i) {
    double best = 1e300;
    int arg = -1;
    for (std::size_t c = 0; c < means.size(); ++c) {
      double d = 0;
      for (std::size_t j = 0; j < f; ++j) d += std::pow(p.test.row(i)[j] - means[c][j], 2);
      if (d < best) best = d, arg = static_cast<int>(c);
    }
    correct += arg == p.test.labels[i];
  }
  return double(correct) / double(p.test.size());
}

TEST(Synth, DeskCorpusIsSeparableByNearestMean) {
  EXPECT_GE(nearest_mean_accuracy(synth_corpus(SynthCorpusSpec{}), 1), 0.99);
}

TEST(Synth, NoSeparationLeavesNearestMeanAtChance) {
  SynthCorpusSpec s;
  s.class_separation = 0.0;
  EXPECT_NEAR(nearest_mean_accuracy(synth_corpus(s), 1), 0.25, 0.1);
}

TEST(Merge, IdentityCountAndProvenance) {
  CsiBatch a = synth_corpus(small_spec());
  CsiBatch e = empty_batch(a.antennas(), a.time(), a.num_classes);
  EXPECT_EQ(merge(a, e), a);
  CsiBatch syn = synth_corpus(small_spec());
  std::fill(syn.sources.begin(), syn.sources.end(), Source::synthetic);
  CsiBatch m = merge(a, syn);
  EXPECT_EQ(m.size(), a.size() + syn.size());
  EXPECT_EQ(m.sources.front(), Source::real);
  EXPECT_EQ(m.sources.back(), Source::synthetic);
  auto want = tagged(a);
  for (const auto& t : tagged(syn)) want.insert(t);
  EXPECT_EQ(tagged(m), want);
}

TEST(Merge, FullScaleCounts) {
  SynthCorpusSpec s;
  s.num_classes = 4;
  s.per_class = 271;
  CsiBatch real = synth_corpus(s);
  s.per_class = 7500;
  s.seed = 99;
  CsiBatch syn = synth_corpus(s);
  EXPECT_EQ(merge(real, syn).size(), 31084u);
}

TEST(Merge, MismatchesAreContractErrors) {
  CsiBatch a = synth_corpus(small_spec());
  SynthCorpusSpec other = small_spec();
  other.time = 9;
  EXPECT_THROW(merge(a, synth_corpus(other)), ContractError);
  other = small_spec();
  other.num_classes = 3;
  EXPECT_THROW(merge(a, synth_corpus(other)), ContractError);
  EXPECT_THROW(merge(a, normalize(a)), ContractError);
  CsiBatch shifted = a;
  for (float& v : shifted.amplitudes.data()) v += 1.0f;
  EXPECT_THROW(merge(normalize(a), normalize(shifted)), ContractError);
}

TEST(Alignment, LabelsFollowRowsThroughEveryOperation) {
  CsiBatch b = synth_corpus(small_spec());
  const auto path = std::filesystem::temp_directory_path() / "csi4_align.csi4";
  save_csi(b, path);
  CsiBatch loaded = load_csi(path);
  std::filesystem::remove(path);
  EXPECT_EQ(tagged(loaded), tagged(b));
  // normalize/denormalize change values; compare against the same maps
  // applied sample by sample.
  CsiBatch n = normalize(loaded);
  for (std::size_t i = 0; i < b.size(); ++i) {
    CsiBatch one = subset(loaded, std::vector<std::size_t>{i});
    EXPECT_EQ(row_checksum(normalize_with(one, *n.norm).row(0)), row_checksum(n.row(i)));
    EXPECT_EQ(n.labels[i], loaded.labels[i]);
  }
  SplitPair p = split(n, 0.75, 5, true);
  CsiBatch joined = merge(p.train, p.test);
  EXPECT_EQ(tagged(joined), tagged(n));
  CsiBatch d = denormalize(joined);
  std::multiset<std::pair<std::uint64_t, int>> expect;
  CsiBatch dn = denormalize(n);
  EXPECT_EQ(tagged(d), tagged(dn));
}

TEST(Subsample, BalancedCap) {
  CsiBatch b = synth_corpus(small_spec());
  CsiBatch s = balanced_subsample(b, 40, 1);
  EXPECT_EQ(s.class_counts(), (std::vector<std::size_t>{10, 10, 10, 10}));
  EXPECT_EQ(balanced_subsample(b, 1000, 1), b);
}

TEST_F(DataFiles, ProvenanceCsv) {
  CsiBatch a = subset(synth_corpus(small_spec()), std::vector<std::size_t>{0, 1});
  a.user_id = 2;
  CsiBatch s = subset(synth_corpus(small_spec()), std::vector<std::size_t>{2});
  s.user_id = 2;
  s.sources[0] = Source::synthetic;
  write_provenance_csv(merge(a, s), dir / "p.csv");
  EXPECT_EQ(read_bytes(dir / "p.csv"),
            "index,label,source,user\n0,0,real,2\n1,1,real,2\n2,2,synthetic,2\n");
}

TEST_F(DataFiles, CsvImportAdapter) {
  write_bytes(dir / "in.csv", "# exported\n1,0.5,1.5,2.5,3.5\n\n0,-1,0,1,2\n");
  CsiBatch b = import_csv(dir / "in.csv", 2, 2, 2, 4);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(b.amplitudes.storage(), (std::vector<float>{0.5f, 1.5f, 2.5f, 3.5f, -1, 0, 1, 2}));
  EXPECT_EQ(b.user_id, 4);
  write_bytes(dir / "bad.csv", "1,0.5,1.5\n");
  EXPECT_THROW(import_csv(dir / "bad.csv", 2, 2, 2, std::nullopt), FormatError);
  write_bytes(dir / "bad.csv", "5,0.5,1.5,1,1\n");
  EXPECT_THROW(import_csv(dir / "bad.csv", 2, 2, 2, std::nullopt), DataError);
}

}  // namespace
}  // namespace csi4
