#include "cvsat/toml_lite.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cvsat/errors.hpp"

namespace cvsat::toml {

namespace {

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '.') {
      if (current.empty()) {
        throw ConfigError("empty key component in path '" + path + "'");
      }
      parts.push_back(current);
      current.clear();
    } else if (is_bare_key_char(c)) {
      current += c;
    } else {
      throw ConfigError(std::string("invalid character '") + c + "' in key path");
    }
  }
  if (current.empty()) {
    throw ConfigError("empty key component in path '" + path + "'");
  }
  parts.push_back(current);
  return parts;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) {
      in_string = !in_string;
    } else if (s[i] == '#' && !in_string) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

Value parse_scalar(const std::string& raw, int line_no);

Value parse_value(const std::string& raw, int line_no) {
  std::string text = strip(raw);
  if (text.empty()) {
    throw ConfigError("missing value at line " + std::to_string(line_no));
  }
  if (text.front() == '[') {
    if (text.back() != ']') {
      throw ConfigError("unterminated array at line " + std::to_string(line_no));
    }
    std::vector<Value> items;
    std::string inner = text.substr(1, text.size() - 2);
    std::string current;
    bool in_string = false;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      char c = inner[i];
      if (c == '"' && (i == 0 || inner[i - 1] != '\\')) {
        in_string = !in_string;
        current += c;
      } else if (c == ',' && !in_string) {
        if (!strip(current).empty()) {
          items.push_back(parse_scalar(strip(current), line_no));
        }
        current.clear();
      } else {
        current += c;
      }
    }
    if (!strip(current).empty()) {
      items.push_back(parse_scalar(strip(current), line_no));
    }
    return Value::array(std::move(items));
  }
  return parse_scalar(text, line_no);
}

Value parse_scalar(const std::string& raw, int line_no) {
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') {
      throw ConfigError("unterminated string at line " + std::to_string(line_no));
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        char next = raw[i + 1];
        if (next == 'n') { out += '\n'; ++i; continue; }
        if (next == 't') { out += '\t'; ++i; continue; }
        if (next == '"') { out += '"'; ++i; continue; }
        if (next == '\\') { out += '\\'; ++i; continue; }
      }
      out += raw[i];
    }
    return Value::string(std::move(out));
  }
  if (raw == "true") {
    return Value::boolean(true);
  }
  if (raw == "false") {
    return Value::boolean(false);
  }
  bool looks_float = raw.find_first_of(".eE") != std::string::npos ||
                     raw == "inf" || raw == "-inf" || raw == "nan";
  try {
    std::size_t used = 0;
    if (!looks_float) {
      int64_t v = std::stoll(raw, &used);
      if (used == raw.size()) {
        return Value::integer(v);
      }
    }
    double d = std::stod(raw, &used);
    if (used == raw.size()) {
      return Value::floating(d);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse value '" + raw + "' at line " +
                    std::to_string(line_no));
}

void serialize_table(const Value& table, const std::string& prefix,
                     std::ostringstream& out) {
  // Scalars of this table first, nested tables after.
  for (const auto& [key, child] : table.entries()) {
    if (!child.is_table()) {
      out << key << " = " << child.scalar_repr() << "\n";
    }
  }
  for (const auto& [key, child] : table.entries()) {
    if (child.is_table()) {
      std::string path = prefix.empty() ? key : prefix + "." + key;
      out << "\n[" << path << "]\n";
      serialize_table(child, path, out);
    }
  }
}

}  // namespace

Value Value::string(std::string v) {
  Value out;
  out.kind_ = Kind::string;
  out.str_ = std::move(v);
  return out;
}

Value Value::integer(int64_t v) {
  Value out;
  out.kind_ = Kind::integer;
  out.int_ = v;
  return out;
}

Value Value::floating(double v) {
  Value out;
  out.kind_ = Kind::floating;
  out.float_ = v;
  return out;
}

Value Value::boolean(bool v) {
  Value out;
  out.kind_ = Kind::boolean;
  out.bool_ = v;
  return out;
}

Value Value::array(std::vector<Value> v) {
  Value out;
  out.kind_ = Kind::array;
  out.items_ = std::move(v);
  return out;
}

bool Value::has(const std::string& path) const {
  const Value* node = this;
  for (const std::string& part : split_path(path)) {
    if (!node->is_table()) {
      return false;
    }
    auto it = node->children_.find(part);
    if (it == node->children_.end()) {
      return false;
    }
    node = &it->second;
  }
  return true;
}

const Value& Value::at(const std::string& path) const {
  const Value* node = this;
  for (const std::string& part : split_path(path)) {
    if (!node->is_table()) {
      throw ConfigError("'" + path + "' traverses a non-table value");
    }
    auto it = node->children_.find(part);
    if (it == node->children_.end()) {
      throw ConfigError("missing config key '" + path + "'");
    }
    node = &it->second;
  }
  return *node;
}

std::string Value::get_string(const std::string& path) const {
  const Value& v = at(path);
  if (v.kind_ != Kind::string) {
    throw ConfigError("config key '" + path + "' must be a string");
  }
  return v.str_;
}

std::string Value::get_string(const std::string& path,
                              const std::string& fallback) const {
  return has(path) ? get_string(path) : fallback;
}

double Value::get_double(const std::string& path) const {
  const Value& v = at(path);
  if (v.kind_ == Kind::floating) {
    return v.float_;
  }
  if (v.kind_ == Kind::integer) {
    return static_cast<double>(v.int_);
  }
  throw ConfigError("config key '" + path + "' must be a number");
}

double Value::get_double(const std::string& path, double fallback) const {
  return has(path) ? get_double(path) : fallback;
}

int64_t Value::get_int(const std::string& path) const {
  const Value& v = at(path);
  if (v.kind_ != Kind::integer) {
    throw ConfigError("config key '" + path + "' must be an integer");
  }
  return v.int_;
}

int64_t Value::get_int(const std::string& path, int64_t fallback) const {
  return has(path) ? get_int(path) : fallback;
}

bool Value::get_bool(const std::string& path, bool fallback) const {
  if (!has(path)) {
    return fallback;
  }
  const Value& v = at(path);
  if (v.kind_ != Kind::boolean) {
    throw ConfigError("config key '" + path + "' must be a boolean");
  }
  return v.bool_;
}

std::vector<double> Value::get_double_array(const std::string& path) const {
  const Value& v = at(path);
  if (v.kind_ != Kind::array) {
    throw ConfigError("config key '" + path + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(v.items_.size());
  for (const Value& item : v.items_) {
    if (item.kind_ == Kind::floating) {
      out.push_back(item.float_);
    } else if (item.kind_ == Kind::integer) {
      out.push_back(static_cast<double>(item.int_));
    } else {
      throw ConfigError("config key '" + path + "' must hold numbers");
    }
  }
  return out;
}

void Value::set(const std::string& path, Value value) {
  if (!is_table()) {
    throw ConfigError("cannot set a key on a non-table value");
  }
  Value* node = this;
  std::vector<std::string> parts = split_path(path);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Value& child = node->children_[parts[i]];
    if (!child.is_table()) {
      child = Value();
    }
    node = &child;
  }
  node->children_[parts.back()] = std::move(value);
}

const std::map<std::string, Value>& Value::entries() const {
  if (!is_table()) {
    throw ConfigError("value is not a table");
  }
  return children_;
}

bool Value::operator==(const Value& other) const {
  if (kind_ != other.kind_) {
    return false;
  }
  switch (kind_) {
    case Kind::table: return children_ == other.children_;
    case Kind::string: return str_ == other.str_;
    case Kind::integer: return int_ == other.int_;
    case Kind::floating: return float_ == other.float_;
    case Kind::boolean: return bool_ == other.bool_;
    case Kind::array: return items_ == other.items_;
  }
  return false;
}

std::string Value::scalar_repr() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::string:
      out << escape_string(str_);
      break;
    case Kind::integer:
      out << int_;
      break;
    case Kind::floating: {
      out.precision(17);
      out << float_;
      if (std::isfinite(float_) && out.str().find_first_of(".eE") == std::string::npos) {
        out << ".0";
      }
      break;
    }
    case Kind::boolean:
      out << (bool_ ? "true" : "false");
      break;
    case Kind::array: {
      out << "[";
      for (std::size_t i = 0; i < items_.size(); ++i) {
        out << (i ? ", " : "") << items_[i].scalar_repr();
      }
      out << "]";
      break;
    }
    case Kind::table:
      throw ConfigError("tables have no scalar representation");
  }
  return out.str();
}

Value parse(const std::string& text) {
  Value root;
  std::string table_prefix;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = strip(strip_comment(line));
    if (body.empty()) {
      continue;
    }
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ConfigError("malformed table header at line " +
                          std::to_string(line_no));
      }
      table_prefix = strip(body.substr(1, body.size() - 2));
      split_path(table_prefix);  // validates
      // Materialize the table even when it stays empty.
      if (!root.has(table_prefix)) {
        root.set(table_prefix, Value());
      } else if (!root.at(table_prefix).is_table()) {
        throw ConfigError("'" + table_prefix + "' is not a table (line " +
                          std::to_string(line_no) + ")");
      }
      continue;
    }
    std::size_t eq = std::string::npos;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') {
        in_string = !in_string;
      } else if (body[i] == '=' && !in_string) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at line " + std::to_string(line_no));
    }
    std::string key = strip(body.substr(0, eq));
    split_path(key);  // validates
    std::string full = table_prefix.empty() ? key : table_prefix + "." + key;
    if (root.has(full)) {
      throw ConfigError("duplicate config key '" + full + "' at line " +
                        std::to_string(line_no));
    }
    root.set(full, parse_value(body.substr(eq + 1), line_no));
  }
  return root;
}

Value parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string serialize(const Value& root) {
  if (!root.is_table()) {
    throw ConfigError("top-level TOML value must be a table");
  }
  std::ostringstream out;
  serialize_table(root, "", out);
  return out.str();
}

}  // namespace cvsat::toml
