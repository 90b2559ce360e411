#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leafseg/image.hpp"

namespace leafseg {

/// Flat `key = value` configuration: one key per line, `#` starts a comment.
/// Sections are expressed through dotted key prefixes (`canny.low`).
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  /// true/false, yes/no, on/off or 1/0.
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Keys starting with `prefix.`, with the prefix removed.
  KeyValueConfig section(const std::string& prefix) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Unset keys leave GridSpec fields at their defaults; returns nullopt when
/// no grid key is present at all.
std::optional<GridSpec> grid_from_config(const KeyValueConfig& cfg);
DistortionParams distortion_from_config(const KeyValueConfig& cfg);

}  // namespace leafseg
