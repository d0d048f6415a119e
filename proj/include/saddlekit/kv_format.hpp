#pragma once

#include "saddlekit/linalg.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace saddlekit {

/// Error raised while reading a key-value document; line and column are
/// 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A scalar number, a bare word, or a bracketed flow list of values.
struct KvValue {
  enum class Kind { Number, Word, List };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string word;
  std::vector<KvValue> items;
  int line = 0;
  int column = 0;

  static KvValue of(double v);
  static KvValue of_word(std::string w);
  static KvValue of_list(std::vector<KvValue> items);
  static KvValue of_vector(const Vector& v);
  static KvValue of_indices(const std::vector<int>& idx, int offset);

  double as_number() const;
  long as_integer() const;
  const std::string& as_word() const;
  const std::vector<KvValue>& as_list() const;
  Vector as_vector() const;
  bool as_bool() const;
};

/// Shortest decimal that reads back to the same double (17 significant
/// digits); inf and nan are spelled "inf", "-inf" and "nan".
std::string format_number(double v);

/// Line-oriented document:
///
///   <header line>
///   # comment
///   key: value
///
/// Keys are [A-Za-z0-9_.\[\]-]+ and must be unique.
class KvDocument {
 public:
  explicit KvDocument(std::string header);

  void add(const std::string& key, KvValue value);
  void add(const std::string& key, double v) { add(key, KvValue::of(v)); }
  void add_word(const std::string& key, std::string w) { add(key, KvValue::of_word(std::move(w))); }
  void comment(const std::string& text);

  const std::string& header() const { return header_; }
  bool contains(const std::string& key) const;
  const KvValue* find(const std::string& key) const;
  /// Throws ParseError naming the key when it is absent.
  const KvValue& at(const std::string& key) const;
  std::vector<std::string> keys() const;

  std::string serialize() const;
  /// Throws ParseError unless the first non-blank line equals `header`.
  static KvDocument parse(std::string_view text, const std::string& header);

 private:
  struct Line {
    bool is_comment = false;
    std::string key;
    KvValue value;
    int line = 0;
  };
  std::string header_;
  std::vector<Line> lines_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace saddlekit
