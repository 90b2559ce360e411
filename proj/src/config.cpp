#include "leafseg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "leafseg/error.hpp"

namespace leafseg {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = trim(std::string_view(content).substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, key + ": not a number: " + *v);
  }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw Error(ErrorCode::ConfigError, key + ": not an integer: " + *v);
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
  throw Error(ErrorCode::ConfigError, key + ": not a boolean: " + *v);
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  const auto v = get(key);
  if (!v) return out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw Error(ErrorCode::ConfigError, key + ": bad list entry: " + t);
    }
    out.push_back(value);
  }
  return out;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

KeyValueConfig KeyValueConfig::section(const std::string& prefix) const {
  KeyValueConfig out;
  const std::string head = prefix + ".";
  for (auto it = values_.lower_bound(head); it != values_.end() && it->first.compare(0, head.size(), head) == 0; ++it) {
    out.values_[it->first.substr(head.size())] = it->second;
  }
  return out;
}

std::optional<GridSpec> grid_from_config(const KeyValueConfig& cfg) {
  static const char* keys[] = {"rows", "cols", "origin_x", "origin_y", "stride_x", "stride_y", "active"};
  bool any = false;
  for (const char* k : keys) any = any || cfg.contains(k);
  if (!any) return std::nullopt;
  GridSpec grid;
  grid.rows = static_cast<int>(cfg.get_int("rows", 1));
  grid.cols = static_cast<int>(cfg.get_int("cols", 1));
  grid.origin_x = static_cast<int>(cfg.get_int("origin_x", 0));
  grid.origin_y = static_cast<int>(cfg.get_int("origin_y", 0));
  grid.stride_x = static_cast<int>(cfg.get_int("stride_x", 0));
  grid.stride_y = static_cast<int>(cfg.get_int("stride_y", 0));
  grid.active = cfg.get_int_list("active");
  return grid;
}

DistortionParams distortion_from_config(const KeyValueConfig& cfg) {
  DistortionParams p;
  p.k1 = cfg.get_double("k1", 0.0);
  p.k2 = cfg.get_double("k2", 0.0);
  if (cfg.contains("cx")) p.cx = cfg.get_double("cx", 0.0);
  if (cfg.contains("cy")) p.cy = cfg.get_double("cy", 0.0);
  return p;
}

}  // namespace leafseg
