#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cvsat::toml {

/// Value tree for the strict TOML subset the config schema uses:
/// [dotted.tables], bare keys, strings, integers, floats, booleans and
/// flat arrays of scalars. Tables serialize with sorted keys, so
/// parse -> serialize -> parse is the identity on the tree.
class Value {
  public:
    enum class Kind { table, string, integer, floating, boolean, array };

    Value() : kind_(Kind::table) {}
    static Value string(std::string v);
    static Value integer(int64_t v);
    static Value floating(double v);
    static Value boolean(bool v);
    static Value array(std::vector<Value> v);

    Kind kind() const { return kind_; }
    bool is_table() const { return kind_ == Kind::table; }

    // Path lookups use dotted keys ("channel.uplink.sigma_b"). Typed
    // getters throw ConfigError on missing keys or kind mismatches; the
    // defaulted forms return the fallback when the key is absent.
    bool has(const std::string& path) const;
    const Value& at(const std::string& path) const;
    std::string get_string(const std::string& path) const;
    std::string get_string(const std::string& path, const std::string& fallback) const;
    double get_double(const std::string& path) const;
    double get_double(const std::string& path, double fallback) const;
    int64_t get_int(const std::string& path) const;
    int64_t get_int(const std::string& path, int64_t fallback) const;
    bool get_bool(const std::string& path, bool fallback) const;
    std::vector<double> get_double_array(const std::string& path) const;

    /// Creates intermediate tables as needed.
    void set(const std::string& path, Value value);

    const std::map<std::string, Value>& entries() const;
    bool operator==(const Value& other) const;

    std::string scalar_repr() const;

  private:
    Kind kind_;
    std::string str_;
    int64_t int_ = 0;
    double float_ = 0.0;
    bool bool_ = false;
    std::vector<Value> items_;
    std::map<std::string, Value> children_;

    friend std::string serialize(const Value& root);
};

Value parse(const std::string& text);
Value parse_file(const std::string& path);
std::string serialize(const Value& root);

}  // namespace cvsat::toml
