#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpnsim {

struct ConfigError : std::runtime_error {
  ConfigError(int line, const std::string& msg)
      : std::runtime_error("config line " + std::to_string(line) + ": " + msg),
        line(line) {}
  int line;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }

  // Typed getters; throw ConfigError naming the offending line.
  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<uint16_t> get_port_list(const std::string& key) const;
  std::vector<uint64_t> get_u64_list(const std::string& key) const;
};

// Sections are "[name]" headers followed by "key = value" lines.
// '#' and ';' start comments. Keys before any section header go into an
// unnamed section "".
std::vector<ConfigSection> parse_config(const std::string& text);
std::vector<ConfigSection> parse_config_file(const std::string& path);

int64_t parse_int(const std::string& value, int line);
double parse_double(const std::string& value, int line);
bool parse_bool(const std::string& value, int line);

// "a.b.c.d" dotted quad to 32-bit address.
uint32_t parse_addr(const std::string& value, int line);

}  // namespace vpnsim
