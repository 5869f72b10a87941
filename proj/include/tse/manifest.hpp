#pragma once
// Run manifests: every CLI command records its resolved configuration, seeds,
// and the digests of all files it read and wrote, so reruns can be compared
// by digest equality.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace tse {

inline constexpr const char* kToolkitVersion = "0.1.0";

// FNV-1a 64-bit over the file bytes.
uint64_t fnv1a_file(const std::string& path);
std::string digest_hex(uint64_t d);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
  double wall_s = 0.0;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void write(const std::string& path) const;
};

}  // namespace tse
