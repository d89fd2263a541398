#pragma once

// Immutable symbolic scalar expressions over named chart variables.
//
// Nodes are shared and never mutated, so an Expression can be copied and
// handed to other threads freely. Construction performs constant folding and
// removes additive zeros / multiplicative ones; nothing more.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace srcurv {

enum class Op { Constant, Variable, Sum, Product, Quotient, Power, Negate, Sin, Cos, Exp, Sqrt };

class Expression;

namespace detail {
struct Node;
}

class Expression {
 public:
  Expression();
  Expression(double c);  // NOLINT(google-explicit-constructor): numeric literals read naturally
  Expression(int c) : Expression(static_cast<double>(c)) {}  // NOLINT

  static Expression constant(double c);
  static Expression variable(std::string name);

  Op op() const;
  double value() const;
  const std::string& name() const;
  int exponent() const;
  std::span<const Expression> args() const;

  bool is_constant() const { return op() == Op::Constant; }
  bool is_zero() const { return is_constant() && value() == 0.0; }
  bool is_one() const { return is_constant() && value() == 1.0; }

  /// Stable identity of the shared node; used for memoisation.
  const void* id() const { return node_.get(); }

 private:
  explicit Expression(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  friend Expression make_node(Op, double, int, std::string, std::vector<Expression>);

  std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
  Op op = Op::Constant;
  double value = 0.0;
  int exponent = 0;
  std::string name;
  std::vector<Expression> args;
};
}  // namespace detail

inline Expression make_node(Op op, double value, int exponent, std::string name,
                            std::vector<Expression> args) {
  auto n = std::make_shared<detail::Node>();
  n->op = op;
  n->value = value;
  n->exponent = exponent;
  n->name = std::move(name);
  n->args = std::move(args);
  return Expression(std::shared_ptr<const detail::Node>(std::move(n)));
}

inline Expression::Expression() : Expression(0.0) {}
inline Expression::Expression(double c) : node_(make_node(Op::Constant, c, 0, {}, {}).node_) {}
inline Expression Expression::constant(double c) { return Expression(c); }
inline Expression Expression::variable(std::string name) {
  return make_node(Op::Variable, 0.0, 0, std::move(name), {});
}
inline Op Expression::op() const { return node_->op; }
inline double Expression::value() const { return node_->value; }
inline const std::string& Expression::name() const { return node_->name; }
inline int Expression::exponent() const { return node_->exponent; }
inline std::span<const Expression> Expression::args() const { return node_->args; }

// ---------------------------------------------------------------------------
// Simplifying constructors.

inline double ipow(double base, int k) {
  if (k < 0) return 1.0 / ipow(base, -k);
  double r = 1.0;
  while (k > 0) {
    if (k & 1) r *= base;
    base *= base;
    k >>= 1;
  }
  return r;
}

inline Expression sum(std::vector<Expression> terms) {
  std::vector<Expression> flat;
  double c = 0.0;
  for (auto& t : terms) {
    if (t.op() == Op::Sum) {
      for (const auto& s : t.args()) {
        if (s.is_constant())
          c += s.value();
        else
          flat.push_back(s);
      }
    } else if (t.is_constant()) {
      c += t.value();
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (c != 0.0) flat.insert(flat.begin(), Expression(c));
  if (flat.empty()) return Expression(0.0);
  if (flat.size() == 1) return flat.front();
  return make_node(Op::Sum, 0.0, 0, {}, std::move(flat));
}

inline Expression product(std::vector<Expression> factors) {
  std::vector<Expression> flat;
  double c = 1.0;
  for (auto& f : factors) {
    if (f.op() == Op::Product) {
      for (const auto& s : f.args()) {
        if (s.is_constant())
          c *= s.value();
        else
          flat.push_back(s);
      }
    } else if (f.is_constant()) {
      c *= f.value();
    } else {
      flat.push_back(std::move(f));
    }
  }
  if (c == 0.0) return Expression(0.0);
  if (c != 1.0) flat.insert(flat.begin(), Expression(c));
  if (flat.empty()) return Expression(c);
  if (flat.size() == 1) return flat.front();
  return make_node(Op::Product, 0.0, 0, {}, std::move(flat));
}

inline Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression(-a.value());
  if (a.op() == Op::Negate) return a.args()[0];
  return make_node(Op::Negate, 0.0, 0, {}, {a});
}

inline Expression operator+(const Expression& a, const Expression& b) { return sum({a, b}); }
inline Expression operator-(const Expression& a, const Expression& b) { return sum({a, -b}); }
inline Expression operator*(const Expression& a, const Expression& b) { return product({a, b}); }

inline Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_zero()) return Expression(0.0);
  if (b.is_one()) return a;
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expression(a.value() / b.value());
  return make_node(Op::Quotient, 0.0, 0, {}, {a, b});
}

inline Expression& operator+=(Expression& a, const Expression& b) { return a = a + b; }
inline Expression& operator-=(Expression& a, const Expression& b) { return a = a - b; }
inline Expression& operator*=(Expression& a, const Expression& b) { return a = a * b; }

inline Expression pow(const Expression& a, int k) {
  if (k == 0) return Expression(1.0);
  if (k == 1) return a;
  if (a.is_constant()) return Expression(ipow(a.value(), k));
  return make_node(Op::Power, 0.0, k, {}, {a});
}

inline Expression sin(const Expression& a) {
  if (a.is_constant()) return Expression(std::sin(a.value()));
  return make_node(Op::Sin, 0.0, 0, {}, {a});
}
inline Expression cos(const Expression& a) {
  if (a.is_constant()) return Expression(std::cos(a.value()));
  return make_node(Op::Cos, 0.0, 0, {}, {a});
}
inline Expression exp(const Expression& a) {
  if (a.is_constant()) return Expression(std::exp(a.value()));
  return make_node(Op::Exp, 0.0, 0, {}, {a});
}
inline Expression sqrt(const Expression& a) {
  if (a.is_constant() && a.value() >= 0.0) return Expression(std::sqrt(a.value()));
  return make_node(Op::Sqrt, 0.0, 0, {}, {a});
}

inline Expression var(std::string name) { return Expression::variable(std::move(name)); }

// ---------------------------------------------------------------------------
// Differentiation and substitution.

namespace detail {
class Differentiator {
 public:
  explicit Differentiator(std::string v) : var_(std::move(v)) {}

  Expression operator()(const Expression& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expression d = compute(e);
    memo_.emplace(e.id(), d);
    keep_.push_back(e);
    return d;
  }

 private:
  Expression compute(const Expression& e) {
    auto a = e.args();
    switch (e.op()) {
      case Op::Constant:
        return 0.0;
      case Op::Variable:
        return e.name() == var_ ? 1.0 : 0.0;
      case Op::Sum: {
        std::vector<Expression> terms;
        for (const auto& t : a) terms.push_back((*this)(t));
        return sum(std::move(terms));
      }
      case Op::Product: {
        std::vector<Expression> terms;
        for (std::size_t i = 0; i < a.size(); ++i) {
          Expression di = (*this)(a[i]);
          if (di.is_zero()) continue;
          std::vector<Expression> f;
          for (std::size_t j = 0; j < a.size(); ++j) f.push_back(j == i ? di : a[j]);
          terms.push_back(product(std::move(f)));
        }
        return sum(std::move(terms));
      }
      case Op::Quotient: {
        Expression dn = (*this)(a[0]);
        Expression dd = (*this)(a[1]);
        if (dd.is_zero()) return dn / a[1];
        return (dn * a[1] - a[0] * dd) / pow(a[1], 2);
      }
      case Op::Power: {
        int k = e.exponent();
        return Expression(static_cast<double>(k)) * pow(a[0], k - 1) * (*this)(a[0]);
      }
      case Op::Negate:
        return -(*this)(a[0]);
      case Op::Sin:
        return cos(a[0]) * (*this)(a[0]);
      case Op::Cos:
        return -(sin(a[0]) * (*this)(a[0]));
      case Op::Exp:
        return e * (*this)(a[0]);
      case Op::Sqrt: {
        Expression da = (*this)(a[0]);
        if (da.is_zero()) return 0.0;
        return da / (Expression(2.0) * e);
      }
    }
    return 0.0;
  }

  std::string var_;
  std::unordered_map<const void*, Expression> memo_;
  std::vector<Expression> keep_;  // pins memo keys alive
};
}  // namespace detail

/// Exact partial derivative with respect to the named variable.
inline Expression differentiate(const Expression& e, const std::string& v) {
  return detail::Differentiator(v)(e);
}

/// Replaces variables by expressions; unmapped variables stay as they are.
inline Expression substitute(const Expression& e, const std::map<std::string, Expression>& repl) {
  std::unordered_map<const void*, Expression> memo;
  std::vector<Expression> keep;
  auto rec = [&](auto&& self, const Expression& x) -> Expression {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    Expression r;
    auto a = x.args();
    switch (x.op()) {
      case Op::Constant:
        r = x;
        break;
      case Op::Variable: {
        auto it = repl.find(x.name());
        r = it == repl.end() ? x : it->second;
        break;
      }
      case Op::Sum: {
        std::vector<Expression> t;
        for (const auto& s : a) t.push_back(self(self, s));
        r = sum(std::move(t));
        break;
      }
      case Op::Product: {
        std::vector<Expression> t;
        for (const auto& s : a) t.push_back(self(self, s));
        r = product(std::move(t));
        break;
      }
      case Op::Quotient:
        r = self(self, a[0]) / self(self, a[1]);
        break;
      case Op::Power:
        r = pow(self(self, a[0]), x.exponent());
        break;
      case Op::Negate:
        r = -self(self, a[0]);
        break;
      case Op::Sin:
        r = sin(self(self, a[0]));
        break;
      case Op::Cos:
        r = cos(self(self, a[0]));
        break;
      case Op::Exp:
        r = exp(self(self, a[0]));
        break;
      case Op::Sqrt:
        r = sqrt(self(self, a[0]));
        break;
    }
    memo.emplace(x.id(), r);
    keep.push_back(x);
    return r;
  };
  return rec(rec, e);
}

/// Names of all variables appearing in e, sorted.
inline std::vector<std::string> free_variables(const Expression& e) {
  std::vector<std::string> out;
  auto rec = [&](auto&& self, const Expression& x) -> void {
    if (x.op() == Op::Variable) out.push_back(x.name());
    for (const auto& a : x.args()) self(self, a);
  };
  rec(rec, e);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Printing in the structure-file expression grammar.

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {
// 0 = expr (sum), 1 = term (product/quotient), 2 = factor (negation), 3 = atom
inline int precedence(const Expression& e) {
  switch (e.op()) {
    case Op::Sum:
      return 0;
    case Op::Product:
    case Op::Quotient:
      return 1;
    case Op::Negate:
      return 2;
    case Op::Constant:
      return e.value() < 0.0 || std::signbit(e.value()) ? 2 : 3;
    default:
      return 3;
  }
}

inline std::string print(const Expression& e);

inline std::string print_at(const Expression& e, int min_prec) {
  std::string s = print(e);
  return precedence(e) < min_prec ? "(" + s + ")" : s;
}

inline std::string print(const Expression& e) {
  auto a = e.args();
  switch (e.op()) {
    case Op::Constant:
      return format_number(e.value());
    case Op::Variable:
      return e.name();
    case Op::Sum: {
      std::string s = print_at(a[0], 0);
      for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i].op() == Op::Negate)
          s += " - " + print_at(a[i].args()[0], 1);
        else
          s += " + " + print_at(a[i], 1);
      }
      return s;
    }
    case Op::Product: {
      // Quotients inside a product need brackets: a*b/c reparses as (a*b)/c.
      std::string s;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) s += "*";
        s += a[i].op() == Op::Quotient ? "(" + print(a[i]) + ")" : print_at(a[i], 2);
      }
      return s;
    }
    case Op::Quotient: {
      std::string den = print(a[1]);
      if (precedence(a[1]) < 2 || a[1].op() == Op::Negate) den = "(" + den + ")";
      return print_at(a[0], 1) + "/" + den;
    }
    case Op::Power: {
      std::string base = print(a[0]);
      if (precedence(a[0]) < 3 || a[0].op() == Op::Power) base = "(" + base + ")";
      return base + "^" + std::to_string(e.exponent());
    }
    case Op::Negate: {
      std::string inner = print(a[0]);
      if (precedence(a[0]) < 3) inner = "(" + inner + ")";
      return "-" + inner;
    }
    case Op::Sin:
      return "sin(" + print(a[0]) + ")";
    case Op::Cos:
      return "cos(" + print(a[0]) + ")";
    case Op::Exp:
      return "exp(" + print(a[0]) + ")";
    case Op::Sqrt:
      return "sqrt(" + print(a[0]) + ")";
  }
  return {};
}
}  // namespace detail

inline std::string to_string(const Expression& e) { return detail::print(e); }

/// Rebuilds e with the children of every sum and product sorted by their
/// printed form. Two expressions are structurally equal when their canonical
/// forms print identically.
inline Expression canonical(const Expression& e) {
  auto a = e.args();
  std::vector<Expression> kids;
  for (const auto& c : a) kids.push_back(canonical(c));
  auto sorted = [&] {
    std::vector<std::pair<std::string, Expression>> keyed;
    for (auto& k : kids) keyed.emplace_back(to_string(k), k);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    std::vector<Expression> out;
    for (auto& [k, v] : keyed) out.push_back(v);
    return out;
  };
  switch (e.op()) {
    case Op::Constant:
    case Op::Variable:
      return e;
    case Op::Sum:
      return make_node(Op::Sum, 0.0, 0, {}, sorted());
    case Op::Product:
      return make_node(Op::Product, 0.0, 0, {}, sorted());
    default:
      return make_node(e.op(), e.value(), e.exponent(), e.name(), std::move(kids));
  }
}

inline bool structurally_equal(const Expression& a, const Expression& b) {
  return to_string(canonical(a)) == to_string(canonical(b));
}

// ---------------------------------------------------------------------------
// Compiled evaluation.

/// Flat evaluation program for a batch of expressions sharing one variable
/// ordering. Shared subtrees are evaluated once.
class Tape {
 public:
  Tape() = default;

  Tape(std::span<const Expression> outputs, std::span<const std::string> variables) {
    std::unordered_map<std::string, int> slot;
    for (std::size_t i = 0; i < variables.size(); ++i) slot[variables[i]] = static_cast<int>(i);
    num_inputs_ = variables.size();
    std::unordered_map<const void*, int> seen;
    std::vector<Expression> keep;
    auto emit = [&](auto&& self, const Expression& e) -> int {
      if (auto it = seen.find(e.id()); it != seen.end()) return it->second;
      Instr ins;
      ins.op = e.op();
      ins.value = e.value();
      ins.exponent = e.exponent();
      if (e.op() == Op::Variable) {
        auto it = slot.find(e.name());
        if (it == slot.end()) throw std::invalid_argument("unknown variable '" + e.name() + "'");
        ins.slot = it->second;
      }
      std::vector<int> kids;
      for (const auto& c : e.args()) kids.push_back(self(self, c));
      ins.first = static_cast<int>(operands_.size());
      ins.count = static_cast<int>(kids.size());
      operands_.insert(operands_.end(), kids.begin(), kids.end());
      int id = static_cast<int>(code_.size());
      code_.push_back(ins);
      seen.emplace(e.id(), id);
      keep.push_back(e);
      return id;
    };
    for (const auto& e : outputs) outputs_.push_back(emit(emit, e));
  }

  std::size_t num_inputs() const { return num_inputs_; }
  std::size_t num_outputs() const { return outputs_.size(); }

  void evaluate(std::span<const double> x, std::span<double> out) const {
    if (x.size() != num_inputs_) throw std::invalid_argument("Tape::evaluate: input size mismatch");
    thread_local std::vector<double> reg;
    reg.resize(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
      const Instr& c = code_[k];
      const int* o = operands_.data() + c.first;
      double r = 0.0;
      switch (c.op) {
        case Op::Constant:
          r = c.value;
          break;
        case Op::Variable:
          r = x[c.slot];
          break;
        case Op::Sum:
          for (int i = 0; i < c.count; ++i) r += reg[o[i]];
          break;
        case Op::Product:
          r = 1.0;
          for (int i = 0; i < c.count; ++i) r *= reg[o[i]];
          break;
        case Op::Quotient:
          r = reg[o[0]] / reg[o[1]];
          break;
        case Op::Power:
          r = ipow(reg[o[0]], c.exponent);
          break;
        case Op::Negate:
          r = -reg[o[0]];
          break;
        case Op::Sin:
          r = std::sin(reg[o[0]]);
          break;
        case Op::Cos:
          r = std::cos(reg[o[0]]);
          break;
        case Op::Exp:
          r = std::exp(reg[o[0]]);
          break;
        case Op::Sqrt:
          r = std::sqrt(reg[o[0]]);
          break;
      }
      reg[k] = r;
    }
    for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = reg[outputs_[i]];
  }

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out(outputs_.size());
    evaluate(x, out);
    return out;
  }

 private:
  struct Instr {
    Op op = Op::Constant;
    double value = 0.0;
    int exponent = 0;
    int slot = -1;
    int first = 0;
    int count = 0;
  };
  std::vector<Instr> code_;
  std::vector<int> operands_;
  std::vector<int> outputs_;
  std::size_t num_inputs_ = 0;
};

/// One-off evaluation with explicit variable bindings.
inline double evaluate(const Expression& e, const std::map<std::string, double>& at) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [k, v] : at) {
    names.push_back(k);
    values.push_back(v);
  }
  Tape t(std::span<const Expression>(&e, 1), names);
  double out = 0.0;
  t.evaluate(values, std::span<double>(&out, 1));
  return out;
}

}  // namespace srcurv
