#include "cbso/config.hpp"

#include <fstream>
#include <sstream>

namespace cbso {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::ConfigError,
              "unterminated section at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      require(!section.empty(), ErrorCode::ConfigError,
              "empty section name at line " + std::to_string(line_no));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::ConfigError,
            "expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::ConfigError,
            "empty key at line " + std::to_string(line_no));
    require(!section.empty(), ErrorCode::ConfigError,
            "key outside any section at line " + std::to_string(line_no));
    cfg.entries_[section + "." + key] = value;
  }
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::ConfigError, "cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  require(dotted_key.find('.') != std::string::npos, ErrorCode::ConfigError,
          "config key must be section.key: " + dotted_key);
  entries_[dotted_key] = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, ErrorCode::ConfigError,
          "override must be section.key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  require(it != entries_.end(), ErrorCode::ConfigError,
          "missing required config key: " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const std::int64_t out = std::stoll(v, &pos);
    require(pos == v.size(), ErrorCode::ConfigError, "bad integer: " + key);
    return out;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigError, "bad integer for key: " + key);
  }
}

std::int64_t Config::get_int(const std::string& key,
                             std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    require(pos == v.size(), ErrorCode::ConfigError, "bad number: " + key);
    return out;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigError, "bad number for key: " + key);
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, "bad boolean for key: " + key);
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::string v = get_string(key);
  for (char& c : v)
    if (c == ',') c = ' ';
  std::istringstream in(v);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  return out;
}

std::string Config::echo() const {
  // std::map keeps dotted keys sorted; group them back into sections.
  std::ostringstream out;
  std::string current_section;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current_section) {
      if (!current_section.empty()) out << "\n";
      out << "[" << section << "]\n";
      current_section = section;
    }
    out << key.substr(dot + 1) << " = " << value << "\n";
  }
  return out.str();
}

}  // namespace cbso
