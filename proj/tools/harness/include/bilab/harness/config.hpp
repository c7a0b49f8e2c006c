#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bilab::harness {

// Raised for unreadable files, unknown keys and values of the wrong type.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

enum class ValueType { integer, real, text, real_list, points };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string fallback;
  std::string help;
};

// Every accepted key with its type and default.
const std::vector<KeySpec>& config_schema();

// Flat `key = value` file; `#` starts a comment. Values are validated against
// the schema when parsed, defaults fill the rest.
class Config {
 public:
  Config();
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);

  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<std::vector<double>> get_points(const std::string& key) const;
  std::uint64_t seed() const;

  // resolved values of every key, sorted
  nlohmann::json echo() const;

 private:
  const KeySpec& spec(const std::string& key) const;
  void validate(const std::string& source, int line, const std::string& key, const std::string& value) const;
  void check_ranges() const;

  std::map<std::string, std::string> values_;
};

}  // namespace bilab::harness
