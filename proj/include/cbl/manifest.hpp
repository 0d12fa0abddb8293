#pragma once

// Reproducibility record written next to every output file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace cbl {

inline constexpr const char* kToolVersion = "0.1.0";

struct OutputChecksum {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::string timestamp;
  std::vector<OutputChecksum> outputs;

  nlohmann::ordered_json to_json() const;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// ISO-8601 UTC. SOURCE_DATE_EPOCH, when set, replaces the clock.
std::string utc_timestamp();

/// `<output>.manifest.json`.
std::filesystem::path manifest_path(const std::filesystem::path& output);

/// Fills in the timestamp and checksums of `outputs`, then writes the
/// manifest beside the first output.
void write_manifest(RunManifest manifest, const std::vector<std::filesystem::path>& outputs);

}  // namespace cbl
