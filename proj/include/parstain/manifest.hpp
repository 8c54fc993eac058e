#pragma once

#include <string>
#include <utility>
#include <vector>

#include "parstain/image.hpp"

namespace parstain {

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record for a pipeline run: seed, config digest, input and
// output digests, stage parameters. Plain "key: value" text on disk.
struct RunManifest {
  std::int64_t seed = 0;
  std::string config_digest;
  std::string created;  // ISO 8601, stored verbatim
  std::string tool_version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> entries;

  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, double value);
  void put(const std::string& key, std::int64_t value);
  const std::string* find(const std::string& key) const;

  bool operator==(const RunManifest& other) const = default;
};

std::string now_iso8601();

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace parstain
