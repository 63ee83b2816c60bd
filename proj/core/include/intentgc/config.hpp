#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace intentgc {

/// Flat `key = value` configuration. `#` starts a comment. Unknown keys,
/// duplicate keys and malformed lines are ConfigErrors.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Sets or replaces a key (command-line overrides). The key must be known.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::uint32_t> get_u32_list(const std::string& key, const std::vector<std::uint32_t>& fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Sorted `key = value` lines.
  std::string normalized() const;
  /// Stable hash of normalized().
  std::string fingerprint() const;

 private:
  std::map<std::string, std::string> values_;
};

/// True for every key some stage reads, including `hot_threshold.<type>`.
bool is_known_config_key(const std::string& key);

}  // namespace intentgc
