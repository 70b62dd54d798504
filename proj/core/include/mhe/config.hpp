#pragma once

#include "mhe/core_math.hpp"

#include <map>
#include <string>
#include <vector>

namespace mhe {

// INI-style key/value configuration with [section] headers. Keys are
// addressed as "section.key"; '#' and ';' start comments.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Space- or comma-separated list of numbers.
  std::vector<double> get_list(const std::string& key) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mhe
