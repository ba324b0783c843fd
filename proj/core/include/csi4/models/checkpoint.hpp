#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include "csi4/models/networks.hpp"

namespace csi4::models {

// Binary checkpoint container, all integers little-endian:
//
//   magic     8 bytes  "CSI4CKPT"
//   version   u16      (currently 1)
//   kind      u8       1 generator, 2 critic, 3 discriminator, 4 classifier
//   spec      kind-specific fields (see checkpoint.cpp), ending with the
//             init seed as u64
//   count     u32      number of parameter entries
//   entries   count x { name_len u16, name bytes, rank u8, dims u32 x rank,
//                       f32 payload }
//
// Entries appear in the spec's canonical parameter order; a load rebuilds
// the expected layout from the stored spec and rejects any mismatch.
inline constexpr char kCheckpointMagic[] = "CSI4CKPT";
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class ModelKind : std::uint8_t { generator = 1, critic = 2, discriminator = 3, classifier = 4 };

using AnySpec = std::variant<GeneratorSpec, CriticSpec, DiscriminatorSpec, ClassifierSpec>;

struct Checkpoint {
  AnySpec spec;
  ModelParams params;

  ModelKind kind() const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws FormatError on bad magic/version/kind or a parameter layout that
// does not match the stored spec, IoError on truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace csi4::models
