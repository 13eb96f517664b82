// Reader for the `key = value` system description files.
//
//   name = "gasket"
//   L = 2
//   d_w = 2.321928
//   essential_vertices = [[0, 0], [1, 0], [0.5, 0.8660254037844386]]
//   maps = [
//     { scale = 0.5, rotation_degrees = 0, translation = [0, 0] },
//     ...
//   ]
//
// Values are numbers, double-quoted strings, arrays and inline tables; `#` starts a comment.
// Arrays and tables may span lines.

#include "fbv/errors.hpp"
#include "fbv/ifs.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace fbv {

namespace {

struct Value {
  enum class Kind { number, string, array, table } kind = Kind::number;
  int line = 0;
  double number = 0.0;
  std::string text;
  std::vector<Value> items;
  std::map<std::string, Value> fields;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::map<std::string, Value> document() {
    std::map<std::string, Value> out;
    for (;;) {
      skip_blank(true);
      if (eof()) break;
      const int key_line = line_;
      const std::string key = identifier();
      skip_blank(false);
      expect('=');
      Value v = value();
      if (out.count(key)) throw ConfigError(key_line, "duplicate key '" + key + "'");
      out.emplace(key, std::move(v));
      skip_blank(false);
      if (!eof() && peek() != '\n') throw ConfigError(line_, "unexpected text after value");
    }
    return out;
  }

  int last_line() const { return line_; }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  void skip_blank(bool newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') ++pos_;
      } else if (c == '\n') {
        if (!newlines) return;
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  void expect(char c) {
    if (eof() || peek() != c) throw ConfigError(line_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    if (start == pos_) throw ConfigError(line_, "expected a key");
    return std::string(src_.substr(start, pos_ - start));
  }

  Value value() {
    skip_blank(false);
    if (eof()) throw ConfigError(line_, "missing value");
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      ++pos_;
      v.kind = Value::Kind::string;
      while (!eof() && peek() != '"' && peek() != '\n') v.text.push_back(src_[pos_++]);
      expect('"');
    } else if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::array;
      for (;;) {
        skip_blank(true);
        if (!eof() && peek() == ']') break;
        v.items.push_back(value());
        skip_blank(true);
        if (!eof() && peek() == ',') {
          ++pos_;
          continue;
        }
        break;
      }
      expect(']');
    } else if (c == '{') {
      ++pos_;
      v.kind = Value::Kind::table;
      for (;;) {
        skip_blank(true);
        if (!eof() && peek() == '}') break;
        const int key_line = line_;
        const std::string key = identifier();
        skip_blank(false);
        expect('=');
        Value field = value();
        if (v.fields.count(key)) throw ConfigError(key_line, "duplicate field '" + key + "'");
        v.fields.emplace(key, std::move(field));
        skip_blank(true);
        if (!eof() && peek() == ',') {
          ++pos_;
          continue;
        }
        break;
      }
      expect('}');
    } else {
      const std::size_t start = pos_;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '-' ||
                        peek() == '+'))
        ++pos_;
      const std::string_view tok = src_.substr(start, pos_ - start);
      if (tok.empty()) throw ConfigError(line_, "unexpected character '" + std::string(1, c) + "'");
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v.number);
      if (ec != std::errc() || end != tok.data() + tok.size())
        throw ConfigError(line_, "not a number: '" + std::string(tok) + "'");
    }
    return v;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

double as_number(const Value& v, const std::string& what) {
  if (v.kind != Value::Kind::number) throw ConfigError(v.line, what + " must be a number");
  return v.number;
}

int as_int(const Value& v, const std::string& what) {
  const double d = as_number(v, what);
  if (d != static_cast<double>(static_cast<int>(d))) throw ConfigError(v.line, what + " must be an integer");
  return static_cast<int>(d);
}

Vec2 as_point(const Value& v, const std::string& what) {
  if (v.kind != Value::Kind::array || v.items.size() != 2)
    throw ConfigError(v.line, what + " must be a two-element array [x, y]");
  return {as_number(v.items[0], what), as_number(v.items[1], what)};
}

const Value& as_array(const Value& v, const std::string& what) {
  if (v.kind != Value::Kind::array) throw ConfigError(v.line, what + " must be an array");
  return v;
}

}  // namespace

SystemConfig parse_system_config(std::string_view text) {
  Parser parser(text);
  auto doc = parser.document();
  static const std::set<std::string> known = {"name", "maps", "essential_vertices", "L", "M", "d_w", "diam",
                                              "window_level"};
  for (const auto& [key, v] : doc)
    if (!known.count(key)) throw ConfigError(v.line, "unknown key '" + key + "'");
  for (const char* required : {"maps", "essential_vertices", "L", "d_w"})
    if (!doc.count(required)) throw ConfigError(parser.last_line(), std::string("missing required key '") + required + "'");

  SystemConfig cfg;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (it->second.kind != Value::Kind::string) throw ConfigError(it->second.line, "name must be a string");
    cfg.name = it->second.text;
  }
  cfg.L = as_number(doc.at("L"), "L");
  cfg.d_w = as_number(doc.at("d_w"), "d_w");
  if (auto it = doc.find("M"); it != doc.end()) cfg.M = as_int(it->second, "M");
  if (auto it = doc.find("diam"); it != doc.end()) cfg.diam = as_number(it->second, "diam");
  if (auto it = doc.find("window_level"); it != doc.end()) cfg.window_level = as_int(it->second, "window_level");
  for (const auto& p : as_array(doc.at("essential_vertices"), "essential_vertices").items)
    cfg.essential_vertices.push_back(as_point(p, "essential vertex"));
  for (const auto& m : as_array(doc.at("maps"), "maps").items) {
    if (m.kind != Value::Kind::table) throw ConfigError(m.line, "each map must be an inline table");
    SystemConfig::Map map;
    for (const auto& [key, v] : m.fields) {
      if (key == "scale") {
        map.scale = as_number(v, "scale");
      } else if (key == "rotation_degrees") {
        map.rotation_degrees = as_number(v, "rotation_degrees");
      } else if (key == "translation") {
        map.translation = as_point(v, "translation");
      } else {
        throw ConfigError(v.line, "unknown map field '" + key + "'");
      }
    }
    if (!m.fields.count("scale")) throw ConfigError(m.line, "map is missing 'scale'");
    cfg.maps.push_back(map);
  }
  return cfg;
}

FractalSystem load_system_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return build_custom(parse_system_config(buf.str()));
}

}  // namespace fbv
