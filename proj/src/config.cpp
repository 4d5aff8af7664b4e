#include "vpnsim/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vpnsim {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

const ConfigEntry* ConfigSection::find(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::string ConfigSection::get_str(const std::string& key,
                                   const std::string& fallback) const {
  const auto* e = find(key);
  return e ? e->value : fallback;
}

std::string ConfigSection::require_str(const std::string& key) const {
  const auto* e = find(key);
  if (!e) throw ConfigError(line, "section [" + name + "] missing key '" + key + "'");
  return e->value;
}

int64_t ConfigSection::get_int(const std::string& key, int64_t fallback) const {
  const auto* e = find(key);
  return e ? parse_int(e->value, e->line) : fallback;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
  const auto* e = find(key);
  return e ? parse_double(e->value, e->line) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
  const auto* e = find(key);
  return e ? parse_bool(e->value, e->line) : fallback;
}

std::vector<uint16_t> ConfigSection::get_port_list(const std::string& key) const {
  std::vector<uint16_t> out;
  const auto* e = find(key);
  if (!e || trim(e->value).empty()) return out;
  for (const auto& part : split(e->value, ',')) {
    int64_t v = parse_int(part, e->line);
    if (v < 0 || v > 65535) throw ConfigError(e->line, "port out of range: " + part);
    out.push_back(static_cast<uint16_t>(v));
  }
  return out;
}

std::vector<uint64_t> ConfigSection::get_u64_list(const std::string& key) const {
  std::vector<uint64_t> out;
  const auto* e = find(key);
  if (!e || trim(e->value).empty()) return out;
  for (const auto& part : split(e->value, ',')) {
    // "a-b" expands to the inclusive range
    auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      int64_t lo = parse_int(part.substr(0, dash), e->line);
      int64_t hi = parse_int(part.substr(dash + 1), e->line);
      if (lo > hi) throw ConfigError(e->line, "bad range: " + part);
      for (int64_t v = lo; v <= hi; ++v) out.push_back(static_cast<uint64_t>(v));
    } else {
      out.push_back(static_cast<uint64_t>(parse_int(part, e->line)));
    }
  }
  return out;
}

std::vector<ConfigSection> parse_config(const std::string& text) {
  std::vector<ConfigSection> sections;
  sections.push_back({"", 0, {}});
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find_first_of("#;");
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(lineno, "unterminated section header: " + line);
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(lineno, "empty section name");
      sections.push_back({name, lineno, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(lineno, "expected 'key = value', got: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    sections.back().entries.push_back({key, value, lineno});
  }
  return sections;
}

std::vector<ConfigSection> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

int64_t parse_int(const std::string& value, int line) {
  const std::string v = trim(value);
  char* end = nullptr;
  long long r = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError(line, "not an integer: '" + value + "'");
  return r;
}

double parse_double(const std::string& value, int line) {
  const std::string v = trim(value);
  char* end = nullptr;
  double r = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError(line, "not a number: '" + value + "'");
  return r;
}

bool parse_bool(const std::string& value, int line) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(line, "not a boolean: '" + value + "'");
}

uint32_t parse_addr(const std::string& value, int line) {
  unsigned a, b, c, d;
  char extra;
  if (std::sscanf(value.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &extra) != 4 ||
      a > 255 || b > 255 || c > 255 || d > 255)
    throw ConfigError(line, "not an address: '" + value + "'");
  return (a << 24) | (b << 16) | (c << 8) | d;
}

}  // namespace vpnsim
