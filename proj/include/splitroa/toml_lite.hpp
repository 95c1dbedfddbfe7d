#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

namespace splitroa {

/// The TOML subset used by problem configs: [tables], key = value pairs,
/// strings, numbers, booleans and (nested, multi-line) arrays, # comments.
struct TomlDocument {
  nlohmann::json root = nlohmann::json::object();
  /// Source position (line, column), 1-based, of every value keyed by its
  /// path, e.g. "system.f[0]".
  std::map<std::string, std::pair<std::size_t, std::size_t>> positions;
};

class TomlError : public std::runtime_error {
 public:
  TomlError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

TomlDocument parse_toml(std::string_view text);

}  // namespace splitroa
