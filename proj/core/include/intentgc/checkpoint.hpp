#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "intentgc/intentnet.hpp"

namespace intentgc {

/// Binary model container (layout in docs/formats.md):
/// magic, version, precision tag, fingerprints, tower specs, named arrays,
/// trailing FNV-1a checksum over everything before it.
template <class Real>
struct Checkpoint {
  std::string config_fingerprint;
  std::string translated_fingerprint;
  std::uint64_t epochs = 0;
  ModelParams<Real> model;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Real>
std::string serialize_checkpoint(const Checkpoint<Real>& ckpt);
/// Throws ChecksumError on corruption and SchemaMismatch on a precision mismatch.
template <class Real>
Checkpoint<Real> deserialize_checkpoint(const std::string& bytes, const std::string& source = "<checkpoint>");

template <class Real>
void save_checkpoint(const Checkpoint<Real>& ckpt, const std::filesystem::path& path);
template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path);

/// Bytes per stored value (4 or 8) after validating magic and checksum.
unsigned checkpoint_precision(const std::filesystem::path& path);

/// Hex of the stored checksum, after verifying it.
std::string checkpoint_digest(const std::filesystem::path& path);

struct CheckpointHeader {
  unsigned precision = 0;
  std::string config_fingerprint;
  std::string translated_fingerprint;
};
/// Reads the leading fields without verifying the checksum; nullopt if the
/// file is missing or not a checkpoint.
std::optional<CheckpointHeader> peek_checkpoint(const std::filesystem::path& path);

}  // namespace intentgc
