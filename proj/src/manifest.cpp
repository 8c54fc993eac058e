#include "parstain/manifest.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace parstain {

void RunManifest::put(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}

void RunManifest::put(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  entries.emplace_back(key, buf);
}

void RunManifest::put(const std::string& key, std::int64_t value) {
  entries.emplace_back(key, std::to_string(value));
}

const std::string* RunManifest::find(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadInputError("cannot write manifest: " + path);
  out << "seed: " << m.seed << "\n";
  out << "config_digest: " << m.config_digest << "\n";
  out << "created: " << m.created << "\n";
  out << "tool_version: " << m.tool_version << "\n";
  for (const auto& [k, v] : m.entries) out << k << ": " << v << "\n";
  if (!out) throw BadInputError("manifest write failed: " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInputError("cannot read manifest: " + path);
  RunManifest m;
  m.tool_version.clear();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find(": ");
    if (pos == std::string::npos)
      throw BadInputError("malformed manifest line " + std::to_string(lineno) + " in " + path);
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 2);
    if (key == "seed") {
      m.seed = std::strtoll(value.c_str(), nullptr, 10);
    } else if (key == "config_digest") {
      m.config_digest = value;
    } else if (key == "created") {
      m.created = value;
    } else if (key == "tool_version") {
      m.tool_version = value;
    } else {
      m.entries.emplace_back(key, value);
    }
  }
  return m;
}

}  // namespace parstain
