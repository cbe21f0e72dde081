#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "baitradar/error.hpp"
#include "baitradar/model.hpp"

namespace baitradar {

/// A model plus the effective configuration that produced it.
struct Checkpoint {
  BaitRadarModel model;
  nlohmann::json config = nlohmann::json::object();
};

enum class CheckpointErrorKind { io, bad_magic, unsupported_version, truncated, checksum, missing_tensor, malformed };

class CheckpointError : public DataError {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all integers little-endian:
//   "BRDR" | u32 version | u64 n + metadata JSON | u64 n + vocabulary text |
//   u8 fitted + 5 f64 means + 5 f64 stddevs | u32 tensor count |
//   per tensor (sorted by name): u32 n + name, u32 rank, u64 dims..., f64 values... |
//   u64 FNV-1a of every preceding byte
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace baitradar
