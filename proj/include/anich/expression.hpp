#pragma once

// Small arithmetic expressions in x, y and pi, for initial conditions and
// config values such as "2*pi". Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('+'|'-') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>

#include "anich/errors.hpp"

namespace anich {

class Expression {
 public:
  explicit Expression(std::string text) : text_(std::move(text)) {
    pos_ = 0;
    root_ = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
  }

  double operator()(double x = 0.0, double y = 0.0) const { return root_->eval(x, y); }
  bool uses_y() const { return root_->uses_y(); }
  bool constant() const { return !root_->uses_x() && !root_->uses_y(); }
  const std::string& text() const { return text_; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double x, double y) const = 0;
    virtual bool uses_x() const { return false; }
    virtual bool uses_y() const { return false; }
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Number : Node {
    double v;
    explicit Number(double value) : v(value) {}
    double eval(double, double) const override { return v; }
  };
  struct Var : Node {
    bool is_y;
    explicit Var(bool y) : is_y(y) {}
    double eval(double x, double y) const override { return is_y ? y : x; }
    bool uses_x() const override { return !is_y; }
    bool uses_y() const override { return is_y; }
  };
  struct Unary : Node {
    double (*fn)(double);
    NodePtr arg;
    Unary(double (*f)(double), NodePtr a) : fn(f), arg(std::move(a)) {}
    double eval(double x, double y) const override { return fn(arg->eval(x, y)); }
    bool uses_x() const override { return arg->uses_x(); }
    bool uses_y() const override { return arg->uses_y(); }
  };
  struct Binary : Node {
    char op;
    NodePtr a, b;
    Binary(char o, NodePtr l, NodePtr r) : op(o), a(std::move(l)), b(std::move(r)) {}
    double eval(double x, double y) const override {
      const double l = a->eval(x, y), r = b->eval(x, y);
      switch (op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/': return l / r;
        default: return std::pow(l, r);
      }
    }
    bool uses_x() const override { return a->uses_x() || b->uses_x(); }
    bool uses_y() const override { return a->uses_y() || b->uses_y(); }
  };

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression \"" + text_ + "\" at " + std::to_string(pos_) + ": " + what);
  }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = std::make_shared<Binary>('+', lhs, parse_term());
      else if (accept('-')) lhs = std::make_shared<Binary>('-', lhs, parse_term());
      else return lhs;
    }
  }
  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = std::make_shared<Binary>('*', lhs, parse_unary());
      else if (accept('/')) lhs = std::make_shared<Binary>('/', lhs, parse_unary());
      else return lhs;
    }
  }
  NodePtr parse_unary() {
    if (accept('-')) return std::make_shared<Binary>('-', std::make_shared<Number>(0.0), parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }
  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return std::make_shared<Binary>('^', base, parse_unary());
    return base;
  }
  NodePtr parse_atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr inner = parse_expr();
      if (!accept(')')) fail("missing ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return std::make_shared<Number>(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return std::make_shared<Var>(false);
      if (name == "y") return std::make_shared<Var>(true);
      if (name == "pi") return std::make_shared<Number>(3.14159265358979323846264338327950288);
      double (*fn)(double) = function(name);
      if (!fn) fail("unknown name '" + name + "'");
      if (!accept('(')) fail("expected '(' after " + name);
      NodePtr arg = parse_expr();
      if (!accept(')')) fail("missing ')'");
      return std::make_shared<Unary>(fn, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  static double (*function(const std::string& name))(double) {
    if (name == "sin") return [](double v) { return std::sin(v); };
    if (name == "cos") return [](double v) { return std::cos(v); };
    if (name == "tan") return [](double v) { return std::tan(v); };
    if (name == "tanh") return [](double v) { return std::tanh(v); };
    if (name == "exp") return [](double v) { return std::exp(v); };
    if (name == "log") return [](double v) { return std::log(v); };
    if (name == "sqrt") return [](double v) { return std::sqrt(v); };
    if (name == "abs") return [](double v) { return std::abs(v); };
    return nullptr;
  }

  std::string text_;
  std::size_t pos_ = 0;
  NodePtr root_;
};

/// Evaluates a constant expression ("2*pi", "1e-3").
inline double evaluate_constant(const std::string& text) {
  const Expression e(text);
  if (!e.constant()) throw InvalidArgument("expression \"" + text + "\" must not depend on x or y");
  return e();
}

}  // namespace anich
