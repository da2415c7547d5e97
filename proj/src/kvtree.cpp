#include "kgd/kvtree.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "kgd/errors.hpp"

namespace kgd {

namespace {

using nlohmann::json;

enum class Tok { ident, number, string, equals, lbrace, rbrace, lbracket, rbracket, comma, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t{Tok::end, "", line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    switch (c) {
      case '=': advance(); t.kind = Tok::equals; return t;
      case '{': advance(); t.kind = Tok::lbrace; return t;
      case '}': advance(); t.kind = Tok::rbrace; return t;
      case '[': advance(); t.kind = Tok::lbracket; return t;
      case ']': advance(); t.kind = Tok::rbracket; return t;
      case ',': advance(); t.kind = Tok::comma; return t;
      case ';': advance(); return next();
      case '"': return lex_string(t);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      t.kind = Tok::number;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '-' || d == '+') {
          t.text.push_back(d);
          advance();
        } else {
          break;
        }
      }
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::ident;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-' || d == '.') {
          t.text.push_back(d);
          advance();
        } else {
          break;
        }
      }
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token lex_string(Token t) {
    t.kind = Tok::string;
    advance();
    while (pos_ < src_.size() && src_[pos_] != '"') {
      if (src_[pos_] == '\n') break;
      if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
      t.text.push_back(src_[pos_]);
      advance();
    }
    if (pos_ >= src_.size() || src_[pos_] != '"') {
      throw ParseError("unterminated string", t.line, t.column);
    }
    advance();
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

json number_value(const Token& t) {
  const std::string& s = t.text;
  bool is_integer = s.find_first_of(".eE") == std::string::npos;
  if (is_integer) {
    long long v = 0;
    const char* first = s.data() + (s.size() > 0 && s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  } else {
    double v = 0.0;
    const char* first = s.data() + (s.size() > 0 && s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  throw ParseError("malformed number '" + s + "'", t.line, t.column);
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { bump(); }

  json document() {
    json out = block(/*nested=*/false);
    return out;
  }

 private:
  void bump() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, cur_.line, cur_.column);
  }

  // Repeated keys collect into an array; the first repeat wraps the
  // existing value even if it was itself a list.
  static void insert(json& obj, std::set<std::string>& repeated, const std::string& key,
                     json value) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      obj[key] = std::move(value);
      return;
    }
    json& slot = *it;
    if (!repeated.count(key)) {
      json first = std::move(slot);
      slot = json::array();
      slot.push_back(std::move(first));
      repeated.insert(key);
    }
    slot.push_back(std::move(value));
  }

  json block(bool nested) {
    json obj = json::object();
    std::set<std::string> repeated;
    while (true) {
      if (cur_.kind == Tok::end) {
        if (nested) fail("missing '}'");
        return obj;
      }
      if (cur_.kind == Tok::rbrace) {
        if (!nested) fail("unmatched '}'");
        bump();
        return obj;
      }
      if (cur_.kind != Tok::ident) fail("expected a key");
      std::string key = cur_.text;
      bump();
      if (cur_.kind == Tok::lbrace) {
        bump();
        insert(obj, repeated, key, block(true));
      } else if (cur_.kind == Tok::equals) {
        bump();
        insert(obj, repeated, key, value());
      } else {
        fail("expected '=' or '{' after key '" + key + "'");
      }
    }
  }

  json scalar() {
    Token t = cur_;
    switch (t.kind) {
      case Tok::number:
        bump();
        return number_value(t);
      case Tok::string:
        bump();
        return t.text;
      case Tok::ident:
        bump();
        if (t.text == "true") return true;
        if (t.text == "false") return false;
        return t.text;
      default:
        fail("expected a value");
    }
  }

  json value() {
    if (cur_.kind != Tok::lbracket) return scalar();
    bump();
    json arr = json::array();
    if (cur_.kind == Tok::rbracket) {
      bump();
      return arr;
    }
    while (true) {
      arr.push_back(scalar());
      if (cur_.kind == Tok::comma) {
        bump();
        continue;
      }
      if (cur_.kind == Tok::rbracket) {
        bump();
        return arr;
      }
      fail("expected ',' or ']'");
    }
  }

  Lexer lex_;
  Token cur_{};
};

}  // namespace

json parse_kvtree(std::string_view text) {
  Parser p(text);
  return p.document();
}

json parse_config_text(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("invalid JSON: ") + e.what());
    }
  }
  return parse_kvtree(text);
}

json as_list(const json& value) {
  if (value.is_null()) return json::array();
  if (value.is_array()) return value;
  json arr = json::array();
  arr.push_back(value);
  return arr;
}

std::string canonical_json(const json& value) { return value.dump(); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kgd
