#include "tse/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "tse/errors.hpp"

namespace tse {

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot digest '" + path + "'");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!f) break;
  }
  return h;
}

std::string digest_hex(uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, digest_hex(fnv1a_file(path)));
}

void RunManifest::add_output(const std::string& path) {
  outputs.emplace_back(path, digest_hex(fnv1a_file(path)));
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["version"] = kToolkitVersion;
  j["config"] = config;
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [p, d] : v) a.push_back({{"path", p}, {"fnv1a64", d}});
    return a;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["wall_s"] = wall_s;
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write manifest '" + path + "'");
  f << j.dump(2) << '\n';
  if (!f) throw ValidationError("write failed for manifest '" + path + "'");
}

}  // namespace tse
