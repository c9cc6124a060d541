#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace anamac {

/// Flat `key = value` file; `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(const std::string& text);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Directory holding the shipped .cfg files.
std::filesystem::path default_config_dir();

}  // namespace anamac
