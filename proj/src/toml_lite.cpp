#include "splitroa/toml_lite.hpp"

#include <cctype>
#include <cstdlib>

namespace splitroa {
namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  TomlDocument parse() {
    nlohmann::json* table = &doc_.root;
    std::string table_path;
    for (;;) {
      skip_blank_and_comments();
      if (at_end()) break;
      if (peek() == '[') {
        advance();
        skip_inline_ws();
        std::string path;
        table = &doc_.root;
        for (;;) {
          const std::string key = parse_key();
          path += (path.empty() ? "" : ".") + key;
          nlohmann::json& next = (*table)[key];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail("'" + path + "' is not a table");
          table = &next;
          skip_inline_ws();
          if (peek() == '.') {
            advance();
            skip_inline_ws();
            continue;
          }
          break;
        }
        expect(']');
        table_path = path;
        end_of_line();
        continue;
      }
      const std::string key = parse_key();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      const std::string path = table_path.empty() ? key : table_path + "." + key;
      if (table->contains(key)) fail("duplicate key '" + path + "'");
      (*table)[key] = parse_value(path);
      end_of_line();
    }
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw TomlError(msg, line_, column_); }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void advance() {
    if (at_end()) return;
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void skip_inline_ws() {
    while (peek() == ' ' || peek() == '\t' || peek() == '\r') advance();
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') advance();
    }
  }
  void skip_blank_and_comments() {
    for (;;) {
      skip_inline_ws();
      skip_comment();
      if (peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (!at_end() && peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
  }

  std::string parse_key() {
    if (peek() == '"') return parse_string();
    std::string key;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-') {
      key += peek();
      advance();
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_string() {
    const char quote = peek();
    advance();
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = peek();
      advance();
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        const char e = peek();
        advance();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  nlohmann::json parse_value(const std::string& path) {
    doc_.positions[path] = {line_, column_};
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') return parse_array(path);
    if (text_.substr(pos_, 4) == "true") {
      for (int i = 0; i < 4; ++i) advance();
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      for (int i = 0; i < 5; ++i) advance();
      return false;
    }
    return parse_number();
  }

  nlohmann::json parse_array(const std::string& path) {
    expect('[');
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
      skip_blank_and_comments();
      if (peek() == ']') {
        advance();
        return arr;
      }
      arr.push_back(parse_value(path + "[" + std::to_string(arr.size()) + "]"));
      skip_blank_and_comments();
      if (peek() == ',') {
        advance();
        continue;
      }
      if (peek() == ']') {
        advance();
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  nlohmann::json parse_number() {
    std::string token;
    while (!at_end()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == 'e' ||
          c == 'E' || c == '_') {
        if (c != '_') token += c;
        advance();
      } else {
        break;
      }
    }
    if (token.empty()) fail("expected a value");
    char* end = nullptr;
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      const double v = std::strtod(token.c_str(), &end);
      if (*end != '\0') fail("malformed number '" + token + "'");
      return v;
    }
    const long long v = std::strtoll(token.c_str(), &end, 10);
    if (*end != '\0') fail("malformed number '" + token + "'");
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
  TomlDocument doc_;
};

}  // namespace

TomlDocument parse_toml(std::string_view text) { return TomlParser(text).parse(); }

}  // namespace splitroa
