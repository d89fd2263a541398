#pragma once

// Text formats:
//
//   structure file            frame file (after choosing a structure)
//   --------------            ---------------------------------------
//   dim 3                     young 2 1
//   vars x y z                E 1 1 : <2n expressions>
//   field X1 : 1, 0, -y/2     F 1 1 : <2n expressions>
//   field X2 : 0, 1, x/2      ...
//
// '#' starts a comment. Expressions follow
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] atom ['^' integer]
//   atom   := number | var | '(' expr ')' | func '(' expr ')'
//   func   := sin | cos | exp | sqrt

#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "expr.hpp"
#include "vector_field.hpp"

namespace srcurv {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                           what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

/// Recursive-descent parser over one line of text. Columns are 1-based.
class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, int line, int column_offset, const std::set<std::string>* allowed)
      : s_(text), line_(line), col0_(column_offset), allowed_(allowed) {}

  Expression parse_expr() {
    Expression e = parse_term();
    for (;;) {
      skip_ws();
      if (peek() == '+') {
        ++pos_;
        e = e + parse_term();
      } else if (peek() == '-') {
        ++pos_;
        e = e - parse_term();
      } else {
        return e;
      }
    }
  }

  std::size_t pos() const { return pos_; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, col0_ + static_cast<int>(pos_) + 1);
  }

 private:
  Expression parse_term() {
    Expression e = parse_factor();
    for (;;) {
      skip_ws();
      if (peek() == '*') {
        ++pos_;
        e = e * parse_factor();
      } else if (peek() == '/') {
        ++pos_;
        e = e / parse_factor();
      } else {
        return e;
      }
    }
  }

  Expression parse_factor() {
    skip_ws();
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos_;
    }
    Expression a = parse_atom();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      std::size_t start = pos_;
      if (peek() == '-' || peek() == '+') ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer exponent");
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      a = pow(a, std::stoi(std::string(s_.substr(start, pos_ - start))));
    }
    return neg ? -a : a;
  }

  Expression parse_atom() {
    skip_ws();
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expression e = parse_expr();
      skip_ws();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      skip_ws();
      if (peek() == '(' && (name == "sin" || name == "cos" || name == "exp" || name == "sqrt")) {
        ++pos_;
        Expression arg = parse_expr();
        skip_ws();
        if (peek() != ')') fail("expected ')' after function argument");
        ++pos_;
        if (name == "sin") return sin(arg);
        if (name == "cos") return cos(arg);
        if (name == "exp") return exp(arg);
        return sqrt(arg);
      }
      if (allowed_ && !allowed_->count(name)) {
        pos_ = start;
        fail("unknown variable '" + name + "'");
      }
      return var(name);
    }
    if (c == '\0') fail("unexpected end of expression");
    fail(std::string("unexpected character '") + c + "'");
  }

  Expression parse_number() {
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        pos_ = save;
      } else {
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == ".") {
      pos_ = start;
      fail("malformed number");
    }
    return Expression(std::strtod(tok.c_str(), nullptr));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
  const std::set<std::string>* allowed_;
};

struct Line {
  int number;
  std::string text;  // comment stripped
};

inline std::vector<Line> significant_lines(std::string_view doc) {
  std::vector<Line> out;
  std::istringstream in{std::string(doc)};
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    bool blank = true;
    for (char c : raw)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (!blank) out.push_back({n, raw});
  }
  return out;
}

inline std::vector<std::pair<std::string, int>> words(const std::string& s) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t st = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (st < i) out.emplace_back(s.substr(st, i - st), static_cast<int>(st) + 1);
  }
  return out;
}

/// Parses "e_1, e_2, ..., e_m" starting at column `offset` of `line`.
inline std::vector<Expression> parse_component_list(const Line& line, std::size_t offset,
                                                    const std::set<std::string>& allowed) {
  std::string_view rest = std::string_view(line.text).substr(offset);
  ExpressionParser p(rest, line.number, static_cast<int>(offset), &allowed);
  std::vector<Expression> comps;
  for (;;) {
    comps.push_back(p.parse_expr());
    p.skip_ws();
    if (p.peek() == ',') {
      rest = rest.substr(p.pos() + 1);
      offset += p.pos() + 1;
      p = ExpressionParser(rest, line.number, static_cast<int>(offset), &allowed);
      continue;
    }
    if (!p.at_end()) p.fail(std::string("unexpected '") + p.peek() + "'");
    return comps;
  }
}

}  // namespace detail

/// Parses a standalone expression. If `variables` is non-empty, names outside
/// it are rejected.
inline Expression parse_expression(std::string_view text, const std::vector<std::string>& variables = {}) {
  std::set<std::string> allowed(variables.begin(), variables.end());
  detail::ExpressionParser p(text, 1, 0, variables.empty() ? nullptr : &allowed);
  Expression e = p.parse_expr();
  if (!p.at_end()) p.fail(std::string("unexpected '") + p.peek() + "'");
  return e;
}

/// Raw contents of a structure file, before any geometric checks.
struct StructureDocument {
  Chart chart;
  std::vector<std::string> field_names;
  std::vector<VectorField> fields;
};

inline StructureDocument parse_structure_document(std::string_view text) {
  auto lines = detail::significant_lines(text);
  if (lines.empty()) throw ParseError("empty structure document", 1, 1);

  auto w0 = detail::words(lines[0].text);
  if (w0.size() != 2 || w0[0].first != "dim") throw ParseError("expected 'dim <n>'", lines[0].number, 1);
  char* end = nullptr;
  long n = std::strtol(w0[1].first.c_str(), &end, 10);
  if (*end != '\0' || n <= 0) throw ParseError("dimension must be a positive integer", lines[0].number, w0[1].second);

  if (lines.size() < 2) throw ParseError("missing 'vars' line", lines[0].number + 1, 1);
  auto w1 = detail::words(lines[1].text);
  if (w1.empty() || w1[0].first != "vars") throw ParseError("expected 'vars <names>'", lines[1].number, 1);
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < w1.size(); ++i) {
    const auto& [nm, col] = w1[i];
    bool ok = std::isalpha(static_cast<unsigned char>(nm[0])) || nm[0] == '_';
    for (char c : nm) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
    if (!ok) throw ParseError("invalid variable name '" + nm + "'", lines[1].number, col);
    if (nm == "sin" || nm == "cos" || nm == "exp" || nm == "sqrt")
      throw ParseError("variable name '" + nm + "' is reserved", lines[1].number, col);
    if (!seen.insert(nm).second) throw ParseError("duplicate variable '" + nm + "'", lines[1].number, col);
    names.push_back(nm);
  }
  if (static_cast<long>(names.size()) != n)
    throw ParseError("dim " + std::to_string(n) + " but " + std::to_string(names.size()) + " variables",
                     lines[1].number, 1);

  StructureDocument doc;
  doc.chart = Chart(names);
  std::set<std::string> field_seen;
  for (std::size_t li = 2; li < lines.size(); ++li) {
    const auto& line = lines[li];
    auto w = detail::words(line.text);
    if (w[0].first != "field") throw ParseError("expected 'field <Name> : ...'", line.number, w[0].second);
    auto colon = line.text.find(':');
    if (colon == std::string::npos) throw ParseError("missing ':' in field line", line.number, 1);
    auto head = detail::words(line.text.substr(0, colon));
    if (head.size() != 2) throw ParseError("expected exactly one field name before ':'", line.number, 1);
    const std::string& fname = head[1].first;
    if (!field_seen.insert(fname).second)
      throw ParseError("duplicate field name '" + fname + "'", line.number, head[1].second);
    auto comps = detail::parse_component_list(line, colon + 1, seen);
    if (comps.size() != names.size())
      throw ParseError("component count " + std::to_string(comps.size()) + " != dim " + std::to_string(n),
                       line.number, static_cast<int>(colon) + 2);
    doc.field_names.push_back(fname);
    doc.fields.emplace_back(doc.chart, std::move(comps));
  }
  if (doc.fields.empty()) throw ParseError("structure declares no fields", lines.back().number + 1, 1);
  if (doc.fields.size() > static_cast<std::size_t>(n))
    throw ParseError("frame has " + std::to_string(doc.fields.size()) + " fields but dim is " + std::to_string(n),
                     lines.back().number, 1);
  return doc;
}

/// Contents of a frame file: box-indexed columns in the (p, x) phase chart.
struct FrameDocument {
  std::vector<int> rows;  // Young diagram row lengths
  std::map<std::pair<int, int>, std::vector<Expression>> e;
  std::map<std::pair<int, int>, std::vector<Expression>> f;
};

inline FrameDocument parse_frame_document(std::string_view text, const Chart& phase_chart) {
  auto lines = detail::significant_lines(text);
  if (lines.empty()) throw ParseError("empty frame document", 1, 1);
  auto w0 = detail::words(lines[0].text);
  if (w0.size() < 2 || w0[0].first != "young") throw ParseError("expected 'young <n_1> ... <n_k>'", lines[0].number, 1);
  FrameDocument doc;
  int total = 0;
  for (std::size_t i = 1; i < w0.size(); ++i) {
    char* end = nullptr;
    long r = std::strtol(w0[i].first.c_str(), &end, 10);
    if (*end != '\0' || r <= 0) throw ParseError("row length must be a positive integer", lines[0].number, w0[i].second);
    if (!doc.rows.empty() && r > doc.rows.back())
      throw ParseError("row lengths must be non-increasing", lines[0].number, w0[i].second);
    doc.rows.push_back(static_cast<int>(r));
    total += static_cast<int>(r);
  }
  if (static_cast<std::size_t>(2 * total) != phase_chart.dim())
    throw ParseError("diagram has " + std::to_string(total) + " boxes but the chart has dimension " +
                         std::to_string(phase_chart.dim() / 2),
                     lines[0].number, 1);
  std::set<std::string> allowed(phase_chart.names().begin(), phase_chart.names().end());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& line = lines[li];
    auto colon = line.text.find(':');
    if (colon == std::string::npos) throw ParseError("missing ':'", line.number, 1);
    auto head = detail::words(line.text.substr(0, colon));
    if (head.size() != 3 || (head[0].first != "E" && head[0].first != "F"))
      throw ParseError("expected 'E <a> <i> :' or 'F <a> <i> :'", line.number, 1);
    int a = std::atoi(head[1].first.c_str());
    int i = std::atoi(head[2].first.c_str());
    if (a < 1 || a > static_cast<int>(doc.rows.size()) || i < 1 || i > doc.rows[a - 1])
      throw ParseError("box (" + head[1].first + "," + head[2].first + ") is not in the diagram", line.number,
                       head[1].second);
    auto comps = detail::parse_component_list(line, colon + 1, allowed);
    if (comps.size() != phase_chart.dim())
      throw ParseError("expected " + std::to_string(phase_chart.dim()) + " components, got " +
                           std::to_string(comps.size()),
                       line.number, static_cast<int>(colon) + 2);
    auto& target = head[0].first == "E" ? doc.e : doc.f;
    if (!target.emplace(std::make_pair(a, i), std::move(comps)).second)
      throw ParseError("duplicate entry for box", line.number, 1);
  }
  for (std::size_t a = 0; a < doc.rows.size(); ++a)
    for (int i = 1; i <= doc.rows[a]; ++i) {
      auto key = std::make_pair(static_cast<int>(a) + 1, i);
      if (!doc.e.count(key) || !doc.f.count(key))
        throw ParseError("missing E or F for box (" + std::to_string(a + 1) + "," + std::to_string(i) + ")",
                         lines.back().number, 1);
    }
  return doc;
}

}  // namespace srcurv
