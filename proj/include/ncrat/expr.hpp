#pragma once

// Formal rational expressions: immutable ordered trees over scalars,
// variables x1..xd, +, * and inversion.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ncrat/numkernel.hpp"

namespace ncrat {

enum class ExprKind { scalar, variable, sum, product, inverse };

class Expr;

namespace detail {

struct ExprNode {
  ExprKind kind;
  Complex value;  // scalar payload
  int index = 0;  // variable index, 1-based
  std::vector<Expr> children;
  std::size_t hash = 0;
  std::size_t size = 1;  // node count of the tree
  int max_var = 0;
};

inline std::size_t saturating_add(std::size_t a, std::size_t b) {
  return a > SIZE_MAX - b ? SIZE_MAX : a + b;
}

inline std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace detail

class Expr {
 public:
  Expr() : Expr(scalar(0.0)) {}

  static Expr scalar(Complex value) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::scalar;
    n->value = value;
    n->hash = detail::hash_combine(
        detail::hash_combine(1, std::hash<double>{}(value.real() + 0.0)),
        std::hash<double>{}(value.imag() + 0.0));
    return Expr(std::move(n));
  }

  static Expr variable(int index) {
    if (index < 1) throw std::invalid_argument("variable index must be >= 1");
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::variable;
    n->index = index;
    n->max_var = index;
    n->hash = detail::hash_combine(2, static_cast<std::size_t>(index));
    return Expr(std::move(n));
  }

  static Expr sum(Expr a, Expr b) {
    return binary(ExprKind::sum, std::move(a), std::move(b));
  }

  static Expr product(Expr a, Expr b) {
    return binary(ExprKind::product, std::move(a), std::move(b));
  }

  static Expr inverse(Expr a) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = ExprKind::inverse;
    n->hash = detail::hash_combine(5, a.hash());
    n->size = detail::saturating_add(1, a.size());
    n->max_var = a.max_variable();
    n->children.push_back(std::move(a));
    return Expr(std::move(n));
  }

  ExprKind kind() const { return node_->kind; }
  bool is_scalar() const { return kind() == ExprKind::scalar; }
  bool is_variable() const { return kind() == ExprKind::variable; }
  Complex value() const { return node_->value; }
  int index() const { return node_->index; }
  const Expr& child(std::size_t i) const { return node_->children.at(i); }
  std::size_t num_children() const { return node_->children.size(); }
  std::size_t hash() const { return node_->hash; }
  /// Number of nodes in the tree (shared subtrees counted with multiplicity).
  std::size_t size() const { return node_->size; }
  /// Largest variable index occurring, 0 if none.
  int max_variable() const { return node_->max_var; }
  const void* id() const { return node_.get(); }

  bool is_scalar_value(Complex z) const { return is_scalar() && value() == z; }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case ExprKind::scalar: return a.value() == b.value();
      case ExprKind::variable: return a.index() == b.index();
      default: break;
    }
    if (a.num_children() != b.num_children()) return false;
    for (std::size_t i = 0; i < a.num_children(); ++i) {
      if (!(a.child(i) == b.child(i))) return false;
    }
    return true;
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> n) : node_(std::move(n)) {}

  static Expr binary(ExprKind kind, Expr a, Expr b) {
    auto n = std::make_shared<detail::ExprNode>();
    n->kind = kind;
    n->hash = detail::hash_combine(
        detail::hash_combine(kind == ExprKind::sum ? 3 : 4, a.hash()), b.hash());
    n->size = detail::saturating_add(detail::saturating_add(1, a.size()), b.size());
    n->max_var = std::max(a.max_variable(), b.max_variable());
    n->children.push_back(std::move(a));
    n->children.push_back(std::move(b));
    return Expr(std::move(n));
  }

  std::shared_ptr<const detail::ExprNode> node_;
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};

using ExprSet = std::unordered_set<Expr, ExprHash>;

/// Row-major matrix of expressions.
struct ExprMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Expr> entries;

  ExprMatrix() = default;
  ExprMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), entries(r * c, Expr::scalar(0.0)) {}
  ExprMatrix(std::size_t r, std::size_t c, std::vector<Expr> e)
      : rows(r), cols(c), entries(std::move(e)) {
    if (entries.size() != rows * cols) {
      throw ShapeError("ExprMatrix: entry count does not match shape");
    }
  }

  const Expr& operator()(std::size_t i, std::size_t j) const {
    return entries[i * cols + j];
  }
  Expr& operator()(std::size_t i, std::size_t j) { return entries[i * cols + j]; }

  static ExprMatrix identity(std::size_t n) {
    ExprMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Expr::scalar(1.0);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Involution

/// The involution fixing variables and conjugating scalars. Products of two
/// non-scalar factors swap their children; a scalar factor is central and
/// keeps its place. Sums keep their order.
inline Expr involution(const Expr& r) {
  std::unordered_map<const void*, Expr> memo;
  std::function<Expr(const Expr&)> go = [&](const Expr& e) -> Expr {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expr out = e;
    switch (e.kind()) {
      case ExprKind::scalar: out = Expr::scalar(std::conj(e.value())); break;
      case ExprKind::variable: break;
      case ExprKind::sum: out = Expr::sum(go(e.child(0)), go(e.child(1))); break;
      case ExprKind::product: {
        const Expr& a = e.child(0);
        const Expr& b = e.child(1);
        if (a.is_scalar() || b.is_scalar()) {
          out = Expr::product(go(a), go(b));
        } else {
          out = Expr::product(go(b), go(a));
        }
        break;
      }
      case ExprKind::inverse: out = Expr::inverse(go(e.child(0))); break;
    }
    memo.emplace(e.id(), out);
    return out;
  };
  return go(r);
}

// ---------------------------------------------------------------------------
// Subexpressions and complexity

/// All distinct subtrees (structural equality), children before parents in
/// left-to-right order; r itself is last.
inline std::vector<Expr> subexpressions(const Expr& r) {
  std::vector<Expr> out;
  ExprSet seen;
  std::function<void(const Expr&)> visit = [&](const Expr& e) {
    if (seen.count(e)) return;
    for (std::size_t i = 0; i < e.num_children(); ++i) visit(e.child(i));
    if (seen.insert(e).second) out.push_back(e);
  };
  visit(r);
  return out;
}

/// Number of distinct nodes (by identity) in the expression DAG.
inline std::size_t dag_size(const Expr& r) {
  std::unordered_set<const void*> seen;
  std::vector<const Expr*> stack{&r};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (!seen.insert(e->id()).second) continue;
    for (std::size_t i = 0; i < e->num_children(); ++i) stack.push_back(&e->child(i));
  }
  return seen.size();
}

/// tau(alpha)=0, tau(x_j)=1, tau(a+b)=max, tau(ab)=sum, tau(a^{-1})=2 tau(a).
inline long tau(const Expr& r) {
  std::unordered_map<const void*, long> memo;
  std::function<long(const Expr&)> go = [&](const Expr& e) -> long {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    long t = 0;
    switch (e.kind()) {
      case ExprKind::scalar: t = 0; break;
      case ExprKind::variable: t = 1; break;
      case ExprKind::sum: t = std::max(go(e.child(0)), go(e.child(1))); break;
      case ExprKind::product: t = go(e.child(0)) + go(e.child(1)); break;
      case ExprKind::inverse: t = 2 * go(e.child(0)); break;
    }
    memo.emplace(e.id(), t);
    return t;
  };
  return go(r);
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite scalar");
  if (x == 0.0) x = 0.0;  // drop the sign of -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_scalar(Complex z) {
  const double re = z.real();
  const double im = z.imag();
  if (im == 0.0) {
    if (re < 0.0) return "(" + format_double(re) + ")";
    return format_double(re);
  }
  std::string s = "(" + format_double(re);
  s += im < 0.0 ? "-" : "+";
  s += format_double(std::abs(im)) + "*i)";
  return s;
}

inline void print_into(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::scalar: out += format_scalar(e.value()); return;
    case ExprKind::variable:
      out += "x" + std::to_string(e.index());
      return;
    case ExprKind::sum: {
      print_into(e.child(0), out);
      out += " + ";
      const bool paren = e.child(1).kind() == ExprKind::sum;
      if (paren) out += "(";
      print_into(e.child(1), out);
      if (paren) out += ")";
      return;
    }
    case ExprKind::product: {
      const bool lp = e.child(0).kind() == ExprKind::sum;
      if (lp) out += "(";
      print_into(e.child(0), out);
      if (lp) out += ")";
      out += "*";
      const bool rp = e.child(1).kind() == ExprKind::sum ||
                      e.child(1).kind() == ExprKind::product;
      if (rp) out += "(";
      print_into(e.child(1), out);
      if (rp) out += ")";
      return;
    }
    case ExprKind::inverse:
      out += "inv(";
      print_into(e.child(0), out);
      out += ")";
      return;
  }
}

}  // namespace detail

/// Prints in the surface grammar; parse(print(e)) is structurally e for every
/// tree without scalar-by-scalar sums or products.
inline std::string print(const Expr& e) {
  std::string out;
  detail::print_into(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& message, std::size_t column)
      : std::invalid_argument(message + " at offset " + std::to_string(column)),
        column_(column) {}
  /// 1-based character position of the error.
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

struct ParseOptions {
  /// Treat x_j as a non-hermitian variable: x_j is replaced by a_j + i*b_j
  /// with hermitian a_j = x_j and b_j = x_{d+j}, so adj(x_j) = a_j - i*b_j.
  /// The resulting expression lives in 2d hermitian variables.
  bool complex_variables = false;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, int d, ParseOptions options)
      : text_(text), d_(d), options_(options) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" +
                                   std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("syntax error: " + msg, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "'");
      fail(std::string("expected '") + c + "' but found '" + text_[pos_] + "'");
    }
  }

  bool accept_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) == kw) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }

  static Expr fold_sum(Expr a, Expr b) {
    if (a.is_scalar() && b.is_scalar()) return Expr::scalar(a.value() + b.value());
    return Expr::sum(std::move(a), std::move(b));
  }

  static Expr fold_product(Expr a, Expr b) {
    if (a.is_scalar() && b.is_scalar()) return Expr::scalar(a.value() * b.value());
    return Expr::product(std::move(a), std::move(b));
  }

  static Expr negate(Expr a) {
    return fold_product(Expr::scalar(-1.0), std::move(a));
  }

  Expr expr() {
    Expr acc = term();
    while (true) {
      if (accept('+')) {
        acc = fold_sum(std::move(acc), term());
      } else if (accept('-')) {
        acc = fold_sum(std::move(acc), term(true));
      } else {
        return acc;
      }
    }
  }

  // A leading minus (unary or from binary subtraction) multiplies the first
  // factor by -1.
  Expr term(bool negated = false) {
    if (accept('-')) negated = !negated;
    Expr acc = factor();
    if (negated) acc = negate(std::move(acc));
    while (accept('*')) acc = fold_product(std::move(acc), factor());
    return acc;
  }

  Expr factor() {
    skip_ws();
    if (accept_keyword("inv(")) {
      Expr inner = expr();
      expect(')');
      return Expr::inverse(std::move(inner));
    }
    if (accept_keyword("adj(")) {
      Expr inner = expr();
      expect(')');
      return involution(inner);
    }
    return atom();
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      expect(')');
      return inner;
    }
    if (c == 'i') {
      ++pos_;
      return Expr::scalar(Complex(0.0, 1.0));
    }
    if (c == 'x') {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      if (start == pos_) fail("expected variable index after 'x'");
      int j = 0;
      auto res = std::from_chars(text_.data() + start, text_.data() + pos_, j);
      if (res.ec != std::errc() || j < 1) {
        pos_ = start;
        fail("invalid variable index");
      }
      if (j > d_) {
        pos_ = start;
        fail("variable index " + std::to_string(j) + " exceeds d = " +
             std::to_string(d_));
      }
      if (options_.complex_variables) {
        return Expr::sum(Expr::variable(j),
                         Expr::product(Expr::scalar(Complex(0.0, 1.0)),
                                       Expr::variable(d_ + j)));
      }
      return Expr::variable(j);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.')) {
        ++pos_;
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
        if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
          pos_ = p;
          while (pos_ < text_.size() &&
                 std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
          }
        }
      }
      double value = 0.0;
      auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
      if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
        pos_ = start;
        fail("malformed number");
      }
      return Expr::scalar(value);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  int d_;
  ParseOptions options_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the surface grammar
///   expr := term (('+'|'-') term)* ; term := ('-')? factor ('*' factor)* ;
///   factor := atom | 'inv(' expr ')' | 'adj(' expr ')' ;
///   atom := number | 'i' | 'x'index | '(' expr ')'.
/// Subtraction and unary minus become multiplication by the scalar -1; sums
/// and products of two scalars are folded; adj() is applied eagerly.
inline Expr parse(std::string_view text, int d, ParseOptions options = {}) {
  return detail::Parser(text, d, options).parse();
}

// ---------------------------------------------------------------------------
// Simplifying constructors used when expressions are generated by code
// (domain widening, certificates). They never drop an inverse of a
// non-scalar and never introduce new inverses.

namespace ops {

inline bool is_zero(const Expr& e) { return e.is_scalar_value(0.0); }
inline bool is_one(const Expr& e) { return e.is_scalar_value(1.0); }

inline Expr add(const Expr& a, const Expr& b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (a.is_scalar() && b.is_scalar()) return Expr::scalar(a.value() + b.value());
  return Expr::sum(a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
  if (is_zero(a) || is_zero(b)) return Expr::scalar(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  if (a.is_scalar() && b.is_scalar()) return Expr::scalar(a.value() * b.value());
  // Keep scalars on the left and merge nested scalar factors.
  if (b.is_scalar()) return mul(b, a);
  if (a.is_scalar() && b.kind() == ExprKind::product && b.child(0).is_scalar()) {
    return mul(Expr::scalar(a.value() * b.child(0).value()), b.child(1));
  }
  return Expr::product(a, b);
}

inline Expr scale(Complex alpha, const Expr& a) { return mul(Expr::scalar(alpha), a); }

inline Expr sub(const Expr& a, const Expr& b) { return add(a, scale(-1.0, b)); }

inline Expr inv(const Expr& a) {
  if (a.is_scalar() && a.value() != 0.0) return Expr::scalar(1.0 / a.value());
  return Expr::inverse(a);
}

inline Expr adj(const Expr& a) { return involution(a); }

inline Expr sum_of(const std::vector<Expr>& terms) {
  Expr acc = Expr::scalar(0.0);
  for (const auto& t : terms) acc = add(acc, t);
  return acc;
}

}  // namespace ops

}  // namespace ncrat
