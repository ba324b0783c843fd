#include "csi4/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "csi4/common/binary_io.hpp"
#include "csi4/common/diagnostics.hpp"
#include "csi4/common/errors.hpp"
#include "csi4/common/rng.hpp"

namespace csi4::data {

namespace {

constexpr double kBaselineAmplitude = 2.0;
constexpr int kTemplateComponents = 3;

template <typename T>
T checked_narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<T>::max()) {
    throw FormatError(std::string(what) + " too large for the container format");
  }
  return static_cast<T>(v);
}

// Largest-remainder apportionment of `total` over groups of the given sizes,
// proportional to size. Ties go to the lower group index.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  const std::size_t m = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> q(sizes.size(), 0);
  if (m == 0) return q;
  std::vector<double> frac(sizes.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact = double(total) * double(sizes[c]) / double(m);
    q[c] = static_cast<std::size_t>(std::floor(exact));
    frac[c] = exact - double(q[c]);
    assigned += q[c];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) ++q[order[i]];
  return q;
}

std::vector<std::vector<std::size_t>> indices_by_class(const CsiBatch& b) {
  std::vector<std::vector<std::size_t>> by_class(b.num_classes);
  for (std::size_t i = 0; i < b.size(); ++i) by_class[b.labels[i]].push_back(i);
  return by_class;
}

CsiBatch affine(const CsiBatch& batch, double scale, double offset, bool clamp) {
  CsiBatch out = batch;
  for (float& v : out.amplitudes.data()) {
    double r = double(v) * scale + offset;
    if (clamp) r = std::clamp(r, -1.0, 1.0);
    v = static_cast<float>(r);
  }
  return out;
}

}  // namespace

void save_csi(const CsiBatch& batch, const std::filesystem::path& path) {
  batch.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  io::Writer w(out);
  w.bytes(std::string_view(kDataMagic, 8));
  w.u16(kDataVersion);
  w.u32(checked_narrow<std::uint32_t>(batch.size(), "sample count"));
  w.u16(checked_narrow<std::uint16_t>(batch.antennas(), "antenna count"));
  w.u16(checked_narrow<std::uint16_t>(batch.time(), "time length"));
  w.u16(checked_narrow<std::uint16_t>(batch.num_classes, "class count"));
  if (batch.user_id && (*batch.user_id < 0 || *batch.user_id > 32767)) {
    throw FormatError("user id must lie in [0, 32767]");
  }
  w.i16(static_cast<std::int16_t>(batch.user_id.value_or(-1)));
  w.u8(batch.normalized ? 1 : 0);
  const NormRange range = batch.norm.value_or(NormRange{});
  w.f32(range.min);
  w.f32(range.max);
  w.f32s(batch.amplitudes.data());
  for (int y : batch.labels) w.u16(static_cast<std::uint16_t>(y));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

CsiBatch load_csi(const std::filesystem::path& path, Source source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  io::Reader r(in);
  if (r.bytes(8) != std::string_view(kDataMagic, 8)) {
    throw FormatError(path.string() + " is not a CSI4DATA file");
  }
  const auto version = r.u16();
  if (version != kDataVersion) {
    throw FormatError("unsupported CSI4DATA version " + std::to_string(version));
  }
  const std::size_t m = r.u32();
  const std::size_t antennas = r.u16();
  const std::size_t time = r.u16();
  const std::size_t k = r.u16();
  const std::int16_t user = r.i16();
  const std::uint8_t normalized = r.u8();
  if (normalized > 1) throw FormatError("invalid normalized flag");
  NormRange range{r.f32(), r.f32()};
  if (antennas == 0 || time == 0) throw FormatError("zero antenna or time dimension");

  CsiBatch b = empty_batch(antennas, time, k);
  if (user >= 0) b.user_id = user;
  b.normalized = normalized == 1;
  if (b.normalized) b.norm = range;
  b.amplitudes = ad::Tensor(ad::Shape{m, antennas, time});
  r.f32s(b.amplitudes.data());
  b.labels.resize(m);
  for (auto& y : b.labels) y = r.u16();
  if (!r.at_end()) throw FormatError(path.string() + " has trailing bytes");
  b.sources.assign(m, source);
  b.validate();
  return b;
}

CsiBatch normalize(const CsiBatch& batch) {
  if (batch.normalized) throw ContractError("batch is already normalized");
  const auto values = batch.amplitudes.data();
  if (values.empty()) {
    warn("normalizing an empty batch; range set to [0, 0]");
    CsiBatch out = batch;
    out.normalized = true;
    out.norm = NormRange{};
    return out;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return normalize_with(batch, NormRange{*lo, *hi});
}

CsiBatch normalize_with(const CsiBatch& batch, NormRange range) {
  if (batch.normalized) throw ContractError("batch is already normalized");
  if (!std::isfinite(range.min) || !std::isfinite(range.max) || range.max < range.min) {
    throw ContractError("invalid normalization range");
  }
  CsiBatch out;
  const double span = double(range.max) - double(range.min);
  if (span == 0.0) {
    warn("constant batch: min == max, all values normalized to 0");
    out = affine(batch, 0.0, 0.0, false);
  } else {
    out = affine(batch, 2.0 / span, -2.0 * double(range.min) / span - 1.0, true);
  }
  out.normalized = true;
  out.norm = range;
  return out;
}

CsiBatch denormalize(const CsiBatch& batch) {
  if (!batch.normalized || !batch.norm) {
    throw ContractError("denormalize needs a normalized batch with a range");
  }
  const double lo = batch.norm->min;
  const double half_span = (double(batch.norm->max) - lo) / 2.0;
  CsiBatch out = affine(batch, half_span, lo + half_span, false);
  out.normalized = false;
  out.norm.reset();
  return out;
}

SplitPair split(const CsiBatch& batch, double ratio, std::uint64_t seed, bool stratified) {
  batch.validate();
  const std::size_t m = batch.size();
  if (m < 2) throw ContractError("split needs at least 2 samples");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("split ratio must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * double(m)));
  if (n_train == 0 || n_train == m) {
    throw ContractError("split ratio leaves the train or test side empty");
  }

  Rng rng(seed, "split");
  std::vector<std::size_t> train, test;
  if (!stratified) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  } else {
    auto by_class = indices_by_class(batch);
    std::vector<std::size_t> sizes;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      const std::size_t n = by_class[c].size();
      if (n == 1) {
        throw DataError("class " + std::to_string(c) + " has a single sample; stratified split needs 2");
      }
      sizes.push_back(n);
    }
    auto quota = apportion(sizes, n_train);
    // Every present class keeps at least one sample on each side. Moves
    // needed to restore the total go to classes with room to spare.
    std::ptrdiff_t excess = 0;
    for (std::size_t c = 0; c < quota.size(); ++c) {
      if (sizes[c] == 0) continue;
      const std::size_t bounded = std::clamp<std::size_t>(quota[c], 1, sizes[c] - 1);
      excess += static_cast<std::ptrdiff_t>(bounded) - static_cast<std::ptrdiff_t>(quota[c]);
      quota[c] = bounded;
    }
    for (std::size_t c = 0; excess != 0 && c < quota.size(); ++c) {
      if (sizes[c] == 0) continue;
      while (excess > 0 && quota[c] > 1) --quota[c], --excess;
      while (excess < 0 && quota[c] + 1 < sizes[c]) ++quota[c], ++excess;
    }
    if (excess != 0) throw DataError("cannot stratify: too few samples per class for this ratio");
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& idx = by_class[c];
      Rng class_rng = rng.fork("class/" + std::to_string(c));
      class_rng.shuffle(std::span<std::size_t>(idx));
      train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
      test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  SplitPair out;
  out.train = subset(batch, train);
  out.test = subset(batch, test);
  out.ratio = ratio;
  out.seed = seed;
  out.train_indices = std::move(train);
  out.test_indices = std::move(test);
  return out;
}

void SynthCorpusSpec::validate() const {
  if (num_classes < 1 || antennas < 1 || time < 1) {
    throw ContractError("corpus needs at least one class, antenna and time step");
  }
  if (per_class < 1) throw ContractError("per_class must be at least 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ContractError("noise_sigma must be finite and non-negative");
  }
  if (!std::isfinite(class_separation)) throw ContractError("class_separation must be finite");
}

CsiBatch synth_corpus(const SynthCorpusSpec& spec) {
  spec.validate();
  const std::size_t k = spec.num_classes, a = spec.antennas, t = spec.time;
  const std::size_t f = a * t;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<std::vector<double>> templates(k, std::vector<double>(f, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    Rng rng(spec.seed, "corpus/template/" + std::to_string(c));
    for (int j = 0; j < kTemplateComponents; ++j) {
      const double fa = double(rng.below(3));
      const double ft = double(rng.below(3));
      const double amp = 0.5 + 0.5 * rng.uniform_double();
      const double phase = two_pi * rng.uniform_double();
      for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t s = 0; s < t; ++s) {
          const double arg = two_pi * (fa * double(i) / double(a) + ft * double(s) / double(t));
          templates[c][i * t + s] += spec.class_separation * amp * std::sin(arg + phase);
        }
      }
    }
  }

  const std::size_t m = k * spec.per_class;
  CsiBatch b = empty_batch(a, t, k);
  b.amplitudes = ad::Tensor(ad::Shape{m, a, t});
  b.labels.resize(m);
  b.sources.assign(m, Source::real);
  Rng noise(spec.seed, "corpus/noise");
  auto data = b.amplitudes.data();
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t c = n % k;
    b.labels[n] = static_cast<int>(c);
    for (std::size_t i = 0; i < f; ++i) {
      const double eps = spec.noise_sigma * double(noise.normal());
      data[n * f + i] = static_cast<float>(kBaselineAmplitude + templates[c][i] + eps);
    }
  }
  return b;
}

CsiBatch merge(const CsiBatch& real, const CsiBatch& synthetic) {
  if (real.antennas() != synthetic.antennas() || real.time() != synthetic.time()) {
    throw ContractError("merge: sample geometry differs (" + ad::to_string(real.amplitudes.shape()) +
                        " vs " + ad::to_string(synthetic.amplitudes.shape()) + ")");
  }
  if (real.num_classes != synthetic.num_classes) throw ContractError("merge: class counts differ");
  if (real.normalized != synthetic.normalized) {
    throw ContractError("merge: batches are in different normalization states");
  }
  if (real.normalized && real.norm != synthetic.norm) {
    throw ContractError("merge: batches were normalized with different ranges");
  }
  CsiBatch out = real;
  const std::size_t m = real.size() + synthetic.size();
  std::vector<float> values(real.amplitudes.storage());
  values.insert(values.end(), synthetic.amplitudes.storage().begin(),
                synthetic.amplitudes.storage().end());
  out.amplitudes = ad::Tensor(ad::Shape{m, real.antennas(), real.time()}, std::move(values));
  out.labels.insert(out.labels.end(), synthetic.labels.begin(), synthetic.labels.end());
  out.sources.insert(out.sources.end(), synthetic.sources.begin(), synthetic.sources.end());
  if (real.user_id != synthetic.user_id) out.user_id.reset();
  return out;
}

CsiBatch balanced_subsample(const CsiBatch& batch, std::size_t cap, std::uint64_t seed) {
  if (cap >= batch.size()) return batch;
  auto by_class = indices_by_class(batch);
  std::vector<std::size_t> sizes;
  for (const auto& idx : by_class) sizes.push_back(idx.size());
  const auto quota = apportion(sizes, cap);
  Rng rng(seed, "subsample");
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    Rng class_rng = rng.fork("class/" + std::to_string(c));
    class_rng.shuffle(std::span<std::size_t>(by_class[c]));
    keep.insert(keep.end(), by_class[c].begin(),
                by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(keep.begin(), keep.end());
  return subset(batch, keep);
}

void write_provenance_csv(const CsiBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "index,label,source,user\n";
  const std::string user = batch.user_id ? std::to_string(*batch.user_id) : "";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << i << ',' << batch.labels[i] << ',' << to_string(batch.sources[i]) << ',' << user << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

CsiBatch import_csv(const std::filesystem::path& path, std::size_t antennas, std::size_t time,
                    std::size_t num_classes, std::optional<int> user_id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::size_t f = antennas * time;
  std::vector<float> values;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const char* p = line.data();
    const char* end = p + line.size();
    auto fail = [&](const std::string& why) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    int label = 0;
    auto res = std::from_chars(p, end, label);
    if (res.ec != std::errc{}) fail("bad label");
    p = res.ptr;
    for (std::size_t i = 0; i < f; ++i) {
      if (p == end || *p != ',') fail("expected " + std::to_string(f) + " values");
      float v = 0.0f;
      res = std::from_chars(p + 1, end, v);
      if (res.ec != std::errc{}) fail("bad value in column " + std::to_string(i + 2));
      values.push_back(v);
      p = res.ptr;
    }
    if (p != end) fail("more than " + std::to_string(f) + " values");
    labels.push_back(label);
  }
  const std::size_t m = labels.size();
  CsiBatch b = make_batch(ad::Tensor(ad::Shape{m, antennas, time}, std::move(values)),
                          std::move(labels), antennas, time, num_classes, Source::real);
  b.user_id = user_id;
  return b;
}

}  // namespace csi4::data
