#include "rdmeta/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rdmeta {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno), "empty section name");
      cfg.sections_[section];  // register even if empty
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno), "empty key");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno), "key before any [section]");
    auto& items = cfg.sections_[section];
    for (const auto& [k, v] : items)
      if (k == key) throw ConfigError(section + "." + key, "duplicate key");
    items.emplace_back(key, value);
  }
  return cfg;
}

const std::string* ExperimentConfig::find(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return nullptr;
  for (const auto& [k, v] : it->second)
    if (k == key) return &v;
  return nullptr;
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ExperimentConfig::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (v == nullptr) throw ConfigError(section + "." + key, "required key missing");
  return *v;
}

std::string ExperimentConfig::get_string(const std::string& section, const std::string& key,
                                         const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v != nullptr ? *v : fallback;
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(section + "." + key, "not a real number: '" + s + "'");
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key,
                                    double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t ExperimentConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  std::int64_t x = 0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec == std::errc() && p == t.data() + t.size()) return x;
  throw ConfigError(section + "." + key, "not an integer: '" + s + "'");
}

std::int64_t ExperimentConfig::get_int(const std::string& section, const std::string& key,
                                       std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& section,
                                                      const std::string& key) const {
  const std::string s = get_string(section, key);
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const double x = std::stod(item, &pos);
      if (!trim(item.substr(pos)).empty()) throw std::invalid_argument(item);
      out.push_back(x);
    } catch (const std::exception&) {
      throw ConfigError(section + "." + key, "bad list entry: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(section + "." + key, "empty list");
  return out;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::section_items(
    const std::string& section) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return {};
  return it->second;
}

std::uint64_t ExperimentConfig::hash() const {
  std::vector<std::string> lines;
  for (const auto& [sec, items] : sections_)
    for (const auto& [k, v] : items) lines.push_back(sec + "." + k + "=" + v);
  std::sort(lines.begin(), lines.end());
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const std::string& l : lines) {
    for (char c : l) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rdmeta
