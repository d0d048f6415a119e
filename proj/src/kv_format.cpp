#include "saddlekit/kv_format.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace saddlekit {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

KvValue KvValue::of(double v) {
  KvValue out;
  out.number = v;
  return out;
}

KvValue KvValue::of_word(std::string w) {
  KvValue out;
  out.kind = Kind::Word;
  out.word = std::move(w);
  return out;
}

KvValue KvValue::of_list(std::vector<KvValue> items) {
  KvValue out;
  out.kind = Kind::List;
  out.items = std::move(items);
  return out;
}

KvValue KvValue::of_vector(const Vector& v) {
  std::vector<KvValue> items;
  items.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) items.push_back(of(v[i]));
  return of_list(std::move(items));
}

KvValue KvValue::of_indices(const std::vector<int>& idx, int offset) {
  std::vector<KvValue> items;
  for (int i : idx) items.push_back(of(static_cast<double>(i + offset)));
  return of_list(std::move(items));
}

double KvValue::as_number() const {
  if (kind != Kind::Number) throw ParseError("expected a number", line, column);
  return number;
}

long KvValue::as_integer() const {
  const double v = as_number();
  if (!(std::abs(v) < 9.0e15) || v != std::floor(v))
    throw ParseError("expected an integer", line, column);
  return static_cast<long>(v);
}

const std::string& KvValue::as_word() const {
  if (kind != Kind::Word) throw ParseError("expected a word", line, column);
  return word;
}

const std::vector<KvValue>& KvValue::as_list() const {
  if (kind != Kind::List) throw ParseError("expected a [list]", line, column);
  return items;
}

Vector KvValue::as_vector() const {
  const auto& list = as_list();
  Vector v(static_cast<Eigen::Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) v[static_cast<Eigen::Index>(i)] = list[i].as_number();
  return v;
}

bool KvValue::as_bool() const {
  const std::string& w = as_word();
  if (w == "true") return true;
  if (w == "false") return false;
  throw ParseError("expected true or false", line, column);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void serialize_value(std::ostringstream& os, const KvValue& v) {
  switch (v.kind) {
    case KvValue::Kind::Number: os << format_number(v.number); break;
    case KvValue::Kind::Word: os << v.word; break;
    case KvValue::Kind::List:
      os << '[';
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) os << ", ";
        serialize_value(os, v.items[i]);
      }
      os << ']';
      break;
  }
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char ch : key) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' ||
                    ch == '[' || ch == ']' || ch == '-';
    if (!ok) return false;
  }
  return true;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, int line, int column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  KvValue parse_all() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    KvValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, offset_ + static_cast<int>(pos_) + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  KvValue parse_value() {
    const int col = offset_ + static_cast<int>(pos_) + 1;
    KvValue v;
    if (text_[pos_] == '[') {
      ++pos_;
      std::vector<KvValue> items;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
      } else {
        while (true) {
          skip_ws();
          if (pos_ >= text_.size()) fail("unterminated list");
          items.push_back(parse_value());
          skip_ws();
          if (pos_ >= text_.size()) fail("unterminated list");
          if (text_[pos_] == ',') {
            ++pos_;
            continue;
          }
          if (text_[pos_] == ']') {
            ++pos_;
            break;
          }
          fail("expected ',' or ']'");
        }
      }
      v = KvValue::of_list(std::move(items));
    } else {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
             text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '[')
        ++pos_;
      const std::string_view token = text_.substr(start, pos_ - start);
      if (token.empty()) fail("empty value");
      v = scalar(token, col);
    }
    v.line = line_;
    v.column = col;
    return v;
  }

  KvValue scalar(std::string_view token, int col) const {
    if (token == "inf" || token == "+inf") return KvValue::of(std::numeric_limits<double>::infinity());
    if (token == "-inf") return KvValue::of(-std::numeric_limits<double>::infinity());
    if (token == "nan") return KvValue::of(std::numeric_limits<double>::quiet_NaN());
    const char first = token.front();
    if (std::isdigit(static_cast<unsigned char>(first)) || first == '-' || first == '+' ||
        first == '.') {
      std::string_view digits = token;
      if (first == '+') digits.remove_prefix(1);
      double value = 0.0;
      const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (res.ec != std::errc() || res.ptr != digits.data() + digits.size())
        throw ParseError("malformed number '" + std::string(token) + "'", line_, col);
      return KvValue::of(value);
    }
    return KvValue::of_word(std::string(token));
  }

  std::string_view text_;
  int line_;
  int offset_;
  std::size_t pos_ = 0;
};

}  // namespace

KvDocument::KvDocument(std::string header) : header_(std::move(header)) {}

void KvDocument::add(const std::string& key, KvValue value) {
  if (!valid_key(key)) throw std::invalid_argument("invalid key '" + key + "'");
  if (contains(key)) throw std::invalid_argument("duplicate key '" + key + "'");
  lines_.push_back({false, key, std::move(value), 0});
}

void KvDocument::comment(const std::string& text) {
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part)) {
    Line l;
    l.is_comment = true;
    l.key = part;
    lines_.push_back(std::move(l));
  }
}

bool KvDocument::contains(const std::string& key) const { return find(key) != nullptr; }

const KvValue* KvDocument::find(const std::string& key) const {
  for (const auto& l : lines_)
    if (!l.is_comment && l.key == key) return &l.value;
  return nullptr;
}

const KvValue& KvDocument::at(const std::string& key) const {
  if (const KvValue* v = find(key)) return *v;
  throw ParseError("missing key '" + key + "'", static_cast<int>(lines_.size()) + 1, 1);
}

std::vector<std::string> KvDocument::keys() const {
  std::vector<std::string> out;
  for (const auto& l : lines_)
    if (!l.is_comment) out.push_back(l.key);
  return out;
}

std::string KvDocument::serialize() const {
  std::ostringstream os;
  os << header_ << '\n';
  for (const auto& l : lines_) {
    if (l.is_comment) {
      os << "#" << (l.key.empty() ? "" : " ") << l.key << '\n';
      continue;
    }
    os << l.key << ": ";
    serialize_value(os, l.value);
    os << '\n';
  }
  return os.str();
}

KvDocument KvDocument::parse(std::string_view text, const std::string& header) {
  KvDocument doc(header);
  bool seen_header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    if (line[first] == '#') {
      if (seen_header) {
        std::string_view body = line.substr(first + 1);
        if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        doc.comment(std::string(body));
      }
      continue;
    }
    if (!seen_header) {
      std::string_view trimmed = line.substr(first);
      while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\t'))
        trimmed.remove_suffix(1);
      if (trimmed != header)
        throw ParseError("expected header '" + header + "'", line_no, static_cast<int>(first) + 1);
      seen_header = true;
      continue;
    }
    const std::size_t colon = line.find(':', first);
    if (colon == std::string_view::npos)
      throw ParseError("expected 'key: value'", line_no, static_cast<int>(first) + 1);
    std::string_view key = line.substr(first, colon - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.remove_suffix(1);
    if (!valid_key(key))
      throw ParseError("invalid key '" + std::string(key) + "'", line_no, static_cast<int>(first) + 1);
    std::string_view rest = line.substr(colon + 1);
    // Trailing comments are allowed after a value.
    if (const std::size_t hash = rest.find('#'); hash != std::string_view::npos)
      rest = rest.substr(0, hash);
    ValueParser vp(rest, line_no, static_cast<int>(colon) + 1);
    KvValue value = vp.parse_all();
    const std::string key_str(key);
    if (doc.contains(key_str))
      throw ParseError("duplicate key '" + key_str + "'", line_no, static_cast<int>(first) + 1);
    doc.lines_.push_back({false, key_str, std::move(value), line_no});
    if (end == text.size()) break;
  }
  if (!seen_header) throw ParseError("missing header '" + header + "'", 1, 1);
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace saddlekit
