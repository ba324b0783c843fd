#include "csi4/models/checkpoint.hpp"

#include <fstream>
#include <string>

#include "csi4/common/binary_io.hpp"
#include "csi4/common/errors.hpp"

namespace csi4::models {
namespace {

void write_widths(io::Writer& w, const std::vector<std::size_t>& widths) {
  w.u32(static_cast<std::uint32_t>(widths.size()));
  for (auto v : widths) w.u32(static_cast<std::uint32_t>(v));
}

std::vector<std::size_t> read_widths(io::Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > 64) throw FormatError("implausible layer count in checkpoint spec");
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = r.u32();
  return out;
}

struct SpecWriter {
  io::Writer& w;
  void operator()(const GeneratorSpec& s) const {
    w.u32(static_cast<std::uint32_t>(s.latent_dim));
    w.u32(static_cast<std::uint32_t>(s.num_classes));
    w.u32(static_cast<std::uint32_t>(s.embed_dim));
    write_widths(w, s.hidden);
    w.u32(static_cast<std::uint32_t>(s.antennas));
    w.u32(static_cast<std::uint32_t>(s.time));
    w.u8(static_cast<std::uint8_t>(s.activation));
    w.u8(s.batchnorm ? 1 : 0);
    w.f32(s.slope);
    w.f32(s.amplitude_min);
    w.f32(s.amplitude_max);
  }
  void operator()(const CriticSpec& s) const {
    w.u32(static_cast<std::uint32_t>(s.in_features));
    w.u32(static_cast<std::uint32_t>(s.num_classes));
    w.u32(static_cast<std::uint32_t>(s.embed_dim));
    write_widths(w, s.hidden);
    w.f32(s.dropout_rate);
    w.f32(s.slope);
  }
  void operator()(const DiscriminatorSpec& s) const {
    w.u32(static_cast<std::uint32_t>(s.in_features));
    w.u32(static_cast<std::uint32_t>(s.num_classes));
    w.u32(static_cast<std::uint32_t>(s.embed_dim));
    write_widths(w, s.hidden);
    w.f32(s.slope);
    w.u8(s.batchnorm ? 1 : 0);
  }
  void operator()(const ClassifierSpec& s) const {
    w.u32(static_cast<std::uint32_t>(s.antennas));
    w.u32(static_cast<std::uint32_t>(s.time));
    write_widths(w, s.conv_channels);
    w.u32(static_cast<std::uint32_t>(s.num_classes));
    w.u32(static_cast<std::uint32_t>(s.kernel));
    w.u32(static_cast<std::uint32_t>(s.padding));
    w.u32(static_cast<std::uint32_t>(s.pool));
  }
};

AnySpec read_spec(io::Reader& r, ModelKind kind) {
  switch (kind) {
    case ModelKind::generator: {
      GeneratorSpec s;
      s.latent_dim = r.u32();
      s.num_classes = r.u32();
      s.embed_dim = r.u32();
      s.hidden = read_widths(r);
      s.antennas = r.u32();
      s.time = r.u32();
      const std::uint8_t act = r.u8();
      if (act > 1) throw FormatError("unknown generator activation tag");
      s.activation = static_cast<Activation>(act);
      s.batchnorm = r.u8() != 0;
      s.slope = r.f32();
      s.amplitude_min = r.f32();
      s.amplitude_max = r.f32();
      return s;
    }
    case ModelKind::critic: {
      CriticSpec s;
      s.in_features = r.u32();
      s.num_classes = r.u32();
      s.embed_dim = r.u32();
      s.hidden = read_widths(r);
      s.dropout_rate = r.f32();
      s.slope = r.f32();
      return s;
    }
    case ModelKind::discriminator: {
      DiscriminatorSpec s;
      s.in_features = r.u32();
      s.num_classes = r.u32();
      s.embed_dim = r.u32();
      s.hidden = read_widths(r);
      s.slope = r.f32();
      s.batchnorm = r.u8() != 0;
      return s;
    }
    case ModelKind::classifier: {
      ClassifierSpec s;
      s.antennas = r.u32();
      s.time = r.u32();
      s.conv_channels = read_widths(r);
      s.num_classes = r.u32();
      s.kernel = r.u32();
      s.padding = r.u32();
      s.pool = r.u32();
      return s;
    }
  }
  throw FormatError("unknown model kind tag");
}

ModelParams skeleton(const AnySpec& spec) {
  try {
    return std::visit(
        [](const auto& s) -> ModelParams {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, GeneratorSpec>) return build_generator(s, 0);
          if constexpr (std::is_same_v<T, CriticSpec>) return build_critic(s, 0);
          if constexpr (std::is_same_v<T, DiscriminatorSpec>) return build_discriminator_bce(s, 0);
          if constexpr (std::is_same_v<T, ClassifierSpec>) return build_classifier(s, 0);
        },
        spec);
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint spec is invalid: ") + e.what());
  }
}

}  // namespace

ModelKind Checkpoint::kind() const {
  return static_cast<ModelKind>(spec.index() + 1);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  io::Writer w(out);
  w.bytes(std::string_view(kCheckpointMagic, 8));
  w.u16(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(ckpt.kind()));
  std::visit(SpecWriter{w}, ckpt.spec);
  w.u64(ckpt.params.init_seed());
  const auto& entries = ckpt.params.entries();
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    w.u8(static_cast<std::uint8_t>(e.value.rank()));
    for (auto d : e.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(e.value.data());
  }
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  io::Reader r(in);
  if (r.bytes(8) != std::string_view(kCheckpointMagic, 8)) {
    throw FormatError(path.string() + " is not a CSI4CKPT checkpoint");
  }
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 4) throw FormatError("unknown model kind tag " + std::to_string(kind));
  AnySpec spec = read_spec(r, static_cast<ModelKind>(kind));
  const std::uint64_t seed = r.u64();
  ModelParams expected = skeleton(spec);
  const std::uint32_t count = r.u32();
  if (count != expected.size()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " tensors, spec implies " +
                      std::to_string(expected.size()));
  }
  std::vector<NamedTensor> entries;
  entries.reserve(count);
  for (const auto& want : expected.entries()) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    const std::uint8_t rank = r.u8();
    ad::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (name != want.name || shape != want.value.shape()) {
      throw FormatError("checkpoint tensor '" + name + "' " + ad::to_string(shape) +
                        " does not match expected '" + want.name + "' " +
                        ad::to_string(want.value.shape()));
    }
    ad::Tensor value(shape);
    r.f32s(value.data());
    entries.push_back(NamedTensor{std::move(name), std::move(value), want.trainable});
  }
  return Checkpoint{std::move(spec), ModelParams(std::move(entries), seed)};
}

}  // namespace csi4::models
