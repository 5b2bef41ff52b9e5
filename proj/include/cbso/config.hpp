#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbso/common.hpp"

namespace cbso {

// Sectioned key = value configuration. Keys are addressed as
// "section.key"; file values are overridden by --set entries.
class Config {
 public:
  static Config from_text(const std::string& text);
  static Config from_file(const std::string& path);

  void set(const std::string& dotted_key, const std::string& value);
  // "section.key=value"; raises ConfigError on malformed input.
  void apply_override(const std::string& assignment);

  bool has(const std::string& dotted_key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // Normalized, sorted rendering used to echo the resolved configuration.
  std::string echo() const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace cbso
