#pragma once
// Flat key = value config files.  One assignment per line, '#' comments,
// blank lines ignored.  Keys may repeat (used for lists, e.g. one line per
// congestion primitive); order of repeats is preserved.

#include <string>
#include <vector>

#include "tse/errors.hpp"

namespace tse {

struct FlatCfg {
  std::vector<std::pair<std::string, std::string>> items;  // in file order

  bool has(const std::string& key) const;
  // Single-valued access: throws ValidationError if the key repeats.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double def) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int def) const;
  // All values for a repeated key, in file order.
  std::vector<std::string> get_all(const std::string& key) const;
};

FlatCfg parse_flatcfg(const std::string& text, const std::string& origin);
FlatCfg read_flatcfg(const std::string& path);

}  // namespace tse
