#include "cbl/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <memory>

#include "cbl/error.hpp"
#include "cbl/table.hpp"

namespace cbl {

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json checksums = nlohmann::ordered_json::array();
  for (const auto& o : outputs) checksums.push_back({{"path", o.path}, {"sha256", o.sha256}});
  return {{"tool", "cbl"},        {"tool_version", tool_version}, {"command", command}, {"parameters", parameters},
          {"seed", seed},         {"timestamp", timestamp},       {"outputs", checksums}};
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw std::runtime_error("sha256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (*end != '\0' || v < 0) throw ValidationError("SOURCE_DATE_EPOCH must be a non-negative integer");
    t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void write_manifest(RunManifest manifest, const std::vector<std::filesystem::path>& outputs) {
  expects(!outputs.empty(), "write_manifest: no outputs");
  manifest.timestamp = utc_timestamp();
  manifest.outputs.clear();
  for (const auto& p : outputs) manifest.outputs.push_back({p.string(), sha256_file(p)});
  write_file(manifest_path(outputs.front()), manifest.to_json().dump(2) + "\n");
}

}  // namespace cbl
