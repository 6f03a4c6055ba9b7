#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdmeta/errors.hpp"

namespace rdmeta {

/// Parsed line-oriented config: "[section]" headers, "key = value" lines,
/// '#' comments. Keys are looked up as "section.key"; every accessor throws
/// ConfigError carrying that field path.
class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  /// Comma-separated list of reals.
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

  /// All keys of one section, in file order.
  std::vector<std::pair<std::string, std::string>> section_items(const std::string& section) const;

  /// FNV-1a hash of the canonicalized (sorted section.key=value) content;
  /// stable across comment/whitespace edits.
  std::uint64_t hash() const;

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  // section -> ordered (key, value)
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;

  const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace rdmeta
