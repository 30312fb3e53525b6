#pragma once

// Structured-text configuration shared by schema files and experiment configs.
//
//   # comment
//   version = 1
//   key = value              (bare text up to end of line or comment)
//   key = "quoted # text"
//   key = [a, b, "c d"]      (list)
//   block_type name {        (name optional; blocks nest)
//     key = value
//   }

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairtab/error.hpp"
#include "fairtab/format.hpp"

namespace fairtab {

struct KvValue {
  std::string text;
  std::vector<std::string> items;  // list entries when is_list
  bool is_list = false;
  int line = 0;
};

struct KvBlock {
  std::string type;
  std::string name;
  std::string source;
  int line = 0;
  std::vector<std::pair<std::string, KvValue>> entries;
  std::vector<KvBlock> blocks;

  const KvValue* find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  std::string where(int at) const { return source + ":" + std::to_string(at); }

  std::string get_string(std::string_view key, const std::string& fallback) const {
    const KvValue* v = find(key);
    if (!v) return fallback;
    if (v->is_list) fail(ErrorKind::kConfig, where(v->line) + ": '" + std::string(key) + "' must be a single value");
    return v->text;
  }

  std::string require_string(std::string_view key) const {
    if (!find(key)) {
      fail(ErrorKind::kConfig, where(line) + ": " + describe() + " is missing '" + std::string(key) + "'");
    }
    return get_string(key, "");
  }

  double get_double(std::string_view key, double fallback) const {
    const KvValue* v = find(key);
    if (!v) return fallback;
    try {
      return parse_double(get_string(key, ""), where(v->line) + ": " + std::string(key));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
  }

  long long get_int(std::string_view key, long long fallback) const {
    const KvValue* v = find(key);
    if (!v) return fallback;
    try {
      return parse_integer(get_string(key, ""), where(v->line) + ": " + std::string(key));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, e.what());
    }
  }

  bool get_bool(std::string_view key, bool fallback) const {
    const KvValue* v = find(key);
    if (!v) return fallback;
    const std::string text = get_string(key, "");
    if (text == "true") return true;
    if (text == "false") return false;
    fail(ErrorKind::kConfig, where(v->line) + ": '" + std::string(key) + "' must be true or false");
  }

  /// List value; a single bare value reads as a one-element list.
  std::vector<std::string> get_list(std::string_view key) const {
    const KvValue* v = find(key);
    if (!v) return {};
    return v->is_list ? v->items : std::vector<std::string>{v->text};
  }

  /// Rejects keys and block types outside the allowed sets.
  void check_keys(const std::set<std::string>& keys, const std::set<std::string>& block_types = {}) const {
    for (const auto& [k, v] : entries) {
      if (!keys.count(k)) fail(ErrorKind::kConfig, where(v.line) + ": unknown key '" + k + "' in " + describe());
    }
    for (const auto& b : blocks) {
      if (!block_types.count(b.type)) {
        fail(ErrorKind::kConfig, where(b.line) + ": unexpected block '" + b.type + "' in " + describe());
      }
    }
  }

  std::string describe() const {
    if (type.empty()) return "top level";
    return name.empty() ? "block '" + type + "'" : "block '" + type + " " + name + "'";
  }
};

namespace detail {

inline bool is_bare_char(char c) {
  return c != '=' && c != '{' && c != '}' && c != '[' && c != ']' && c != ',' && c != '"' &&
         c != '#' && c != ' ' && c != '\t';
}

class KvLexer {
 public:
  KvLexer(std::string_view line, const std::string& where) : s_(line), where_(where) {}

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_space();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  std::string word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_bare_char(s_[pos_])) ++pos_;
    if (start == pos_) error("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) error("unterminated string");
    ++pos_;
    return out;
  }

  /// Scalar value: quoted string or bare text up to a comment (trimmed).
  std::string scalar(bool in_list) {
    if (peek() == '"') return quoted();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '#' && !(in_list && (s_[pos_] == ',' || s_[pos_] == ']'))) {
      if (!in_list && (s_[pos_] == '{' || s_[pos_] == '}')) error("unexpected brace in value");
      ++pos_;
    }
    std::string out(trim(s_.substr(start, pos_ - start)));
    if (out.empty()) error("empty value");
    return out;
  }

  [[noreturn]] void error(const std::string& what) const { fail(ErrorKind::kConfig, where_ + ": " + what); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::string where_;
};

}  // namespace detail

inline KvBlock parse_kv(std::string_view text, const std::string& source) {
  KvBlock root;
  root.source = source;
  std::vector<KvBlock*> stack{&root};
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    detail::KvLexer lex(text.substr(start, end - start), where);
    start = end + 1;
    if (lex.at_end()) continue;

    if (lex.accept('}')) {
      if (stack.size() == 1) lex.error("unmatched '}'");
      stack.pop_back();
      if (!lex.at_end()) lex.error("unexpected text after '}'");
      continue;
    }
    const std::string head = lex.word();
    KvBlock& current = *stack.back();
    if (lex.accept('=')) {
      if (current.find(head)) lex.error("duplicate key '" + head + "'");
      KvValue value;
      value.line = line_no;
      if (lex.accept('[')) {
        value.is_list = true;
        if (!lex.accept(']')) {
          do {
            value.items.push_back(lex.scalar(true));
          } while (lex.accept(','));
          if (!lex.accept(']')) lex.error("expected ']'");
        }
      } else {
        value.text = lex.scalar(false);
      }
      if (!lex.at_end()) lex.error("unexpected text after value");
      current.entries.emplace_back(head, std::move(value));
      continue;
    }
    KvBlock block;
    block.type = head;
    block.source = source;
    block.line = line_no;
    if (lex.peek() != '{') block.name = lex.peek() == '"' ? lex.quoted() : lex.word();
    if (!lex.accept('{')) lex.error("expected '=' or '{' after '" + head + "'");
    if (!lex.at_end()) lex.error("block contents must start on the next line");
    current.blocks.push_back(std::move(block));
    stack.push_back(&current.blocks.back());
  }
  if (stack.size() > 1) {
    fail(ErrorKind::kConfig, source + ":" + std::to_string(stack.back()->line) + ": " +
                                 stack.back()->describe() + " is never closed");
  }
  return root;
}

/// Checks the top-level `version` key against the supported value.
inline void require_version(const KvBlock& root, long long supported) {
  if (!root.find("version")) fail(ErrorKind::kConfig, root.source + ": missing 'version'");
  const long long v = root.get_int("version", 0);
  if (v != supported) {
    fail(ErrorKind::kConfig, root.source + ": unsupported version " + std::to_string(v) + " (expected " +
                                 std::to_string(supported) + ")");
  }
}

/// Quotes a value when it would not survive as bare text.
inline std::string kv_quote(const std::string& value) {
  bool bare = !value.empty() && value == std::string(trim(value));
  for (char c : value) bare = bare && c != '#' && c != '"' && c != ',' && c != '[' && c != ']' && c != '{' && c != '}';
  if (bare) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace fairtab
