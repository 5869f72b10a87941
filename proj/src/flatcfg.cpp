#include "tse/flatcfg.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tse {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

bool FlatCfg::has(const std::string& key) const {
  for (const auto& [k, v] : items)
    if (k == key) return true;
  return false;
}

const std::string& FlatCfg::get(const std::string& key) const {
  const std::string* found = nullptr;
  for (const auto& [k, v] : items) {
    if (k != key) continue;
    if (found) throw ValidationError("config key '" + key + "' given more than once");
    found = &v;
  }
  if (!found) throw ValidationError("missing config key '" + key + "'");
  return *found;
}

std::string FlatCfg::get_or(const std::string& key, const std::string& def) const {
  return has(key) ? get(key) : def;
}

double FlatCfg::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': bad number '" + s + "'");
  return v;
}

double FlatCfg::get_double_or(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

int FlatCfg::get_int(const std::string& key) const {
  const std::string& s = get(key);
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': bad integer '" + s + "'");
  return v;
}

int FlatCfg::get_int_or(const std::string& key, int def) const {
  return has(key) ? get_int(key) : def;
}

std::vector<std::string> FlatCfg::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : items)
    if (k == key) out.push_back(v);
  return out;
}

FlatCfg parse_flatcfg(const std::string& text, const std::string& origin) {
  FlatCfg cfg;
  std::stringstream ss(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.items.emplace_back(std::move(key), std::move(val));
  }
  return cfg;
}

FlatCfg read_flatcfg(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open for reading: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_flatcfg(buf.str(), path);
}

}  // namespace tse
