#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/errors.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

/// Flat key=value configuration. '#' starts a comment; blank lines are
/// skipped; keys and values are trimmed.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text, const std::string& base_dir = ".");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;

  /// Path value resolved against the directory of the config file.
  std::string get_path(const std::string& key) const;

  /// Keys starting with `prefix`, in lexicographic order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::string base_dir_ = ".";
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
Vec3 parse_vec3(const std::string& text, const std::string& what);

/// Splits "a=1 b=2,3" into {a: "1", b: "2,3"}; bare words map to "".
std::map<std::string, std::string> parse_attributes(const std::string& text);

}  // namespace mvgeom
