#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pufm/errors.hpp"
#include "pufm/geometry.hpp"
#include "pufm/mesh.hpp"
#include "pufm/velocity_net.hpp"

namespace pufm {

// Whitespace floats, one point per line, extra columns ignored. Writes 9
// significant digits.
PointCloud read_xyz(const std::filesystem::path& path);
void write_xyz(const PointCloud& cloud, const std::filesystem::path& path);

// Ascii and binary-little-endian PLY with float or double x/y/z vertex
// properties. Other fixed-size vertex properties are skipped; everything after
// the vertex element (faces etc.) is ignored. List properties inside the
// vertex element and big-endian files are rejected with a FormatError naming
// the header line. The writer emits binary-little-endian float32.
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);

// v/f records; polygons are fan-triangulated; negative indices count back from
// the vertices seen so far.
TriangleMesh read_obj(const std::filesystem::path& path);

struct CheckpointMeta {
  std::uint64_t train_step = 0;
  std::uint64_t config_hash = 0;
};

struct Checkpoint {
  NetArch arch;
  std::vector<float> params;
  std::optional<AdamState<float>> adam;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Fixed little-endian layout: "PUFM" magic, u32 version, architecture record
// as length-prefixed key/value pairs, u64 parameter count, f32 payload,
// optional optimizer moments, then training metadata. Round-trips bitwise.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pufm
