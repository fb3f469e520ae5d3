#include "microloc/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace microloc {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  void run(std::map<std::string, Config::Section>& sections, std::vector<std::string>& order) {
    Config::Section* current = nullptr;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      char c = peek();
      if (c == '[') {
        int l = line_, col = col_;
        get();
        skip_spaces();
        std::string name = identifier("section name");
        skip_spaces();
        expect(']');
        end_of_line();
        if (sections.count(name)) fail("duplicate section [" + name + "]", l, col);
        auto& sec = sections[name];
        sec.name = name;
        sec.line = l;
        sec.column = col;
        order.push_back(name);
        current = &sec;
        continue;
      }
      int l = line_, col = col_;
      std::string key = identifier("key");
      if (!current) fail("key '" + key + "' outside of any section", l, col);
      skip_spaces();
      expect('=');
      skip_spaces();
      ConfigValue v = value();
      end_of_line();
      if (current->values.count(key)) fail("duplicate key '" + key + "' in [" + current->name + "]", l, col);
      current->values[key] = v;
      current->order.push_back(key);
    }
  }

 private:
  [[noreturn]] void fail(const std::string& m, int l = -1, int c = -1) const {
    throw ConfigParseError(m, l < 0 ? line_ : l, c < 0 ? col_ : c);
  }
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[i_]; }
  char get() {
    char c = s_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) get();
  }
  void skip_comment() {
    if (peek() == '#' || peek() == ';')
      while (!eof() && peek() != '\n') get();
  }
  // whitespace, comments and newlines, used inside arrays
  void skip_any() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n') {
        get();
        continue;
      }
      break;
    }
  }
  void skip_blank_lines() { skip_any(); }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
    get();
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'" + (eof() ? " before end of input" : std::string(", found '") + peek() + "'"));
    get();
  }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'; }
  std::string identifier(const char* what) {
    std::string out;
    while (!eof() && ident_char(peek())) out += get();
    if (out.empty()) fail(std::string("expected ") + what + (eof() ? "" : std::string(", found '") + peek() + "'"));
    return out;
  }

  ConfigValue value() {
    ConfigValue v;
    v.line = line_;
    v.column = col_;
    char c = peek();
    if (eof() || c == '\n' || c == '#' || c == ';') fail("missing value");
    if (c == '[') {
      get();
      v.type = ConfigValue::Type::Array;
      skip_any();
      if (peek() == ']') {
        get();
        return v;
      }
      while (true) {
        v.items.push_back(value());
        skip_any();
        if (peek() == ',') {
          get();
          skip_any();
          continue;
        }
        if (peek() == ']') {
          get();
          break;
        }
        if (eof()) fail("unterminated array", v.line, v.column);
        fail(std::string("expected ',' or ']' in array, found '") + peek() + "'");
      }
      return v;
    }
    if (c == '"') {
      get();
      v.type = ConfigValue::Type::String;
      while (true) {
        if (eof() || peek() == '\n') fail("unterminated string", v.line, v.column);
        char ch = get();
        if (ch == '"') break;
        if (ch == '\\') {
          if (eof()) fail("unterminated string", v.line, v.column);
          char e = get();
          if (e == 'n') v.text += '\n';
          else if (e == 't') v.text += '\t';
          else if (e == '"' || e == '\\') v.text += e;
          else fail(std::string("unknown escape '\\") + e + "'");
        } else {
          v.text += ch;
        }
      }
      return v;
    }
    // bare token: number, boolean or word
    std::string tok;
    auto stop = [&](char ch) {
      return ch == '\n' || ch == '#' || ch == ';' || ch == ',' || ch == ']' || ch == ' ' || ch == '\t' || ch == '\r';
    };
    while (!eof() && !stop(peek())) tok += get();
    if (tok == "true" || tok == "false") {
      v.type = ConfigValue::Type::Bool;
      v.boolean = tok == "true";
      v.text = tok;
      return v;
    }
    char first = tok[0];
    if (std::isdigit(static_cast<unsigned char>(first)) || first == '-' || first == '+' || first == '.') {
      char* end = nullptr;
      double d = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(d)) fail("malformed number '" + tok + "'", v.line, v.column);
      v.type = ConfigValue::Type::Number;
      v.number = d;
      v.text = tok;
      return v;
    }
    for (char ch : tok)
      if (!ident_char(ch) && ch != '/' && ch != ':') fail("unquoted string '" + tok + "' contains '" + ch + "'", v.line, v.column);
    v.type = ConfigValue::Type::String;
    v.text = tok;
    return v;
  }

  const std::string& s_;
  size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

}  // namespace

const char* ConfigValue::type_name() const {
  switch (type) {
    case Type::Number: return "number";
    case Type::String: return "string";
    case Type::Bool: return "boolean";
    default: return "array";
  }
}

Config parse_config(const std::string& text) {
  Config cfg;
  Parser p(text);
  p.run(cfg.sections_, cfg.order_);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError("cannot read config file '" + path + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

bool Config::has(const std::string& s, const std::string& key) const {
  auto it = sections_.find(s);
  return it != sections_.end() && it->second.values.count(key);
}

const Config::Section& Config::section(const std::string& s) const {
  auto it = sections_.find(s);
  if (it == sections_.end()) throw ConfigParseError("missing section [" + s + "]", 0, 0);
  return it->second;
}

std::vector<std::string> Config::section_names() const { return order_; }

const ConfigValue& Config::value(const std::string& s, const std::string& key) const {
  const auto& sec = section(s);
  auto it = sec.values.find(key);
  if (it == sec.values.end())
    throw ConfigParseError("missing key '" + key + "' in [" + s + "]", sec.line, sec.column);
  return it->second;
}

void Config::fail_at(const ConfigValue& v, const std::string& message) const {
  throw ConfigParseError(message, v.line, v.column);
}

double Config::number(const std::string& s, const std::string& key) const {
  const auto& v = value(s, key);
  if (v.type != ConfigValue::Type::Number) fail_at(v, "'" + key + "' must be a number, not a " + v.type_name());
  return v.number;
}

double Config::number(const std::string& s, const std::string& key, double fallback) const {
  return has(s, key) ? number(s, key) : fallback;
}

int Config::integer(const std::string& s, const std::string& key, int fallback) const {
  if (!has(s, key)) return fallback;
  const auto& v = value(s, key);
  double d = number(s, key);
  if (d != std::floor(d) || std::abs(d) > 2e9) fail_at(v, "'" + key + "' must be an integer");
  return static_cast<int>(d);
}

bool Config::boolean(const std::string& s, const std::string& key, bool fallback) const {
  if (!has(s, key)) return fallback;
  const auto& v = value(s, key);
  if (v.type != ConfigValue::Type::Bool) fail_at(v, "'" + key + "' must be true or false");
  return v.boolean;
}

std::string Config::string(const std::string& s, const std::string& key) const {
  const auto& v = value(s, key);
  if (v.type != ConfigValue::Type::String) fail_at(v, "'" + key + "' must be a string, not a " + v.type_name());
  return v.text;
}

std::string Config::string(const std::string& s, const std::string& key, const std::string& fallback) const {
  return has(s, key) ? string(s, key) : fallback;
}

std::vector<double> Config::numbers(const std::string& s, const std::string& key) const {
  const auto& v = value(s, key);
  if (v.type == ConfigValue::Type::Number) return {v.number};
  if (v.type != ConfigValue::Type::Array) fail_at(v, "'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& it : v.items) {
    if (it.type != ConfigValue::Type::Number) fail_at(it, "'" + key + "' must contain numbers only");
    out.push_back(it.number);
  }
  return out;
}

std::vector<std::string> Config::strings(const std::string& s, const std::string& key) const {
  const auto& v = value(s, key);
  if (v.type == ConfigValue::Type::String) return {v.text};
  if (v.type != ConfigValue::Type::Array) fail_at(v, "'" + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& it : v.items) {
    if (it.type != ConfigValue::Type::String) fail_at(it, "'" + key + "' must contain strings only");
    out.push_back(it.text);
  }
  return out;
}

std::vector<std::vector<double>> Config::rows(const std::string& s, const std::string& key) const {
  const auto& v = value(s, key);
  if (v.type != ConfigValue::Type::Array) fail_at(v, "'" + key + "' must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : v.items) {
    if (row.type != ConfigValue::Type::Array) fail_at(row, "'" + key + "' must be an array of arrays");
    std::vector<double> r;
    for (const auto& it : row.items) {
      if (it.type != ConfigValue::Type::Number) fail_at(it, "'" + key + "' must contain numbers only");
      r.push_back(it.number);
    }
    out.push_back(std::move(r));
  }
  return out;
}

Vec4 Config::vec4(const std::string& s, const std::string& key) const {
  auto v = numbers(s, key);
  if (v.size() != 4) fail_at(value(s, key), "'" + key + "' needs 4 components, got " + std::to_string(v.size()));
  return Vec4(v[0], v[1], v[2], v[3]);
}

void Config::allow_only(const std::string& s, const std::vector<std::string>& allowed) const {
  if (!has_section(s)) return;
  const auto& sec = section(s);
  for (const auto& key : sec.order) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) fail_at(sec.values.at(key), "unknown key '" + key + "' in [" + s + "]");
  }
}

void Config::set(const std::string& s, const std::string& key, ConfigValue v) {
  auto& sec = sections_[s];
  if (sec.name.empty()) {
    sec.name = s;
    order_.push_back(s);
  }
  if (!sec.values.count(key)) sec.order.push_back(key);
  sec.values[key] = std::move(v);
}

}  // namespace microloc
