#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "microloc/error.hpp"
#include "microloc/types.hpp"

namespace microloc {

// Config errors carry the 1-based position of the offending text (0 when
// the problem is not tied to one place, e.g. a missing section).
class ConfigParseError : public Error {
 public:
  ConfigParseError(const std::string& message, int line, int column)
      : Error(ErrorCode::ConfigError, position(line, column) + message), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string position(int line, int column) {
    return line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " : std::string();
  }
  int line_ = 0, column_ = 0;
};

struct ConfigValue {
  enum class Type { Number, String, Bool, Array };
  Type type = Type::String;
  double number = 0.0;
  std::string text;  // strings; for numbers the literal as written
  bool boolean = false;
  std::vector<ConfigValue> items;
  int line = 0, column = 0;

  const char* type_name() const;
};

// Sections of key = value pairs. Accessors throw ConfigParseError pointing at
// the value (wrong type) or at the section header (missing key).
class Config {
 public:
  struct Section {
    std::string name;
    int line = 0, column = 0;
    std::map<std::string, ConfigValue> values;
    std::vector<std::string> order;
  };

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& key) const;
  const Section& section(const std::string& s) const;
  const ConfigValue& value(const std::string& s, const std::string& key) const;
  std::vector<std::string> section_names() const;

  double number(const std::string& s, const std::string& key) const;
  double number(const std::string& s, const std::string& key, double fallback) const;
  int integer(const std::string& s, const std::string& key, int fallback) const;
  bool boolean(const std::string& s, const std::string& key, bool fallback) const;
  std::string string(const std::string& s, const std::string& key) const;
  std::string string(const std::string& s, const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& s, const std::string& key) const;
  std::vector<std::string> strings(const std::string& s, const std::string& key) const;
  std::vector<std::vector<double>> rows(const std::string& s, const std::string& key) const;
  Vec4 vec4(const std::string& s, const std::string& key) const;

  // Rejects keys outside `allowed` in section s.
  void allow_only(const std::string& s, const std::vector<std::string>& allowed) const;
  [[noreturn]] void fail_at(const ConfigValue& v, const std::string& message) const;

  // Overrides a value; used for command-line flags layered over a file.
  void set(const std::string& s, const std::string& key, ConfigValue v);

 private:
  friend Config parse_config(const std::string& text);
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

}  // namespace microloc
