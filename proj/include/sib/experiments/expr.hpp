#pragma once

// Arithmetic expressions for config values and sampled initial data:
// numbers, pi, e, variables x and y, + - * / ^, unary minus and the usual
// elementary functions. Parsed once into a tree, evaluated many times.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sib::expr {

class ParseError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Vars {
  double x = 0.0;
  double y = 0.0;
};

class Expression {
public:
  Expression() = default;
  explicit Expression(const std::string &text) : text_(text) {
    Parser p(text);
    root_ = p.parse();
  }

  double operator()(const Vars &v = {}) const {
    if (!root_) throw std::logic_error("empty expression");
    return root_->eval(v);
  }
  const std::string &text() const { return text_; }
  bool uses_coordinates() const { return root_ && root_->uses_xy(); }

private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(const Vars &) const = 0;
    virtual bool uses_xy() const = 0;
  };
  using Ptr = std::unique_ptr<Node>;

  struct Number : Node {
    double value;
    explicit Number(double v) : value(v) {}
    double eval(const Vars &) const override { return value; }
    bool uses_xy() const override { return false; }
  };
  struct Variable : Node {
    bool is_x;
    explicit Variable(bool x) : is_x(x) {}
    double eval(const Vars &v) const override { return is_x ? v.x : v.y; }
    bool uses_xy() const override { return true; }
  };
  struct Unary : Node {
    double (*fn)(double);
    Ptr arg;
    Unary(double (*f)(double), Ptr a) : fn(f), arg(std::move(a)) {}
    double eval(const Vars &v) const override { return fn(arg->eval(v)); }
    bool uses_xy() const override { return arg->uses_xy(); }
  };
  struct Binary : Node {
    char op;
    Ptr lhs, rhs;
    Binary(char o, Ptr l, Ptr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
    double eval(const Vars &v) const override {
      const double a = lhs->eval(v), b = rhs->eval(v);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
    bool uses_xy() const override { return lhs->uses_xy() || rhs->uses_xy(); }
  };

  class Parser {
  public:
    explicit Parser(const std::string &s) : s_(s) {}

    Ptr parse() {
      Ptr e = sum();
      skip();
      if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
      return e;
    }

  private:
    [[noreturn]] void fail(const std::string &msg) const {
      throw ParseError("expression \"" + s_ + "\": " + msg + " at position " + std::to_string(pos_));
    }
    void skip() {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
      skip();
      if (pos_ < s_.size() && s_[pos_] == c) {
        ++pos_;
        return true;
      }
      return false;
    }

    Ptr sum() {
      Ptr e = product();
      for (;;) {
        if (eat('+')) e = std::make_unique<Binary>('+', std::move(e), product());
        else if (eat('-')) e = std::make_unique<Binary>('-', std::move(e), product());
        else return e;
      }
    }
    Ptr product() {
      Ptr e = unary();
      for (;;) {
        if (eat('*')) e = std::make_unique<Binary>('*', std::move(e), unary());
        else if (eat('/')) e = std::make_unique<Binary>('/', std::move(e), unary());
        else return e;
      }
    }
    Ptr unary() {
      if (eat('-')) return std::make_unique<Unary>([](double a) { return -a; }, unary());
      if (eat('+')) return unary();
      return power();
    }
    // right associative; -2^2 = -(2^2)
    Ptr power() {
      Ptr base = primary();
      if (eat('^')) return std::make_unique<Binary>('^', std::move(base), unary());
      return base;
    }
    Ptr primary() {
      skip();
      if (pos_ >= s_.size()) fail("unexpected end");
      if (eat('(')) {
        Ptr e = sum();
        if (!eat(')')) fail("missing ')'");
        return e;
      }
      const char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char *begin = s_.c_str() + pos_;
        char *end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos_ += static_cast<size_t>(end - begin);
        return std::make_unique<Number>(v);
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (eat('(')) {
          Ptr arg = sum();
          if (!eat(')')) fail("missing ')' after argument of " + name);
          return std::make_unique<Unary>(function(name), std::move(arg));
        }
        if (name == "pi") return std::make_unique<Number>(std::numbers::pi);
        if (name == "e") return std::make_unique<Number>(std::numbers::e);
        if (name == "x") return std::make_unique<Variable>(true);
        if (name == "y") return std::make_unique<Variable>(false);
        fail("unknown identifier '" + name + "'");
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }

    double (*function(const std::string &name) const)(double) {
      static const std::map<std::string, double (*)(double)> table = {
          {"sin", [](double a) { return std::sin(a); }},   {"cos", [](double a) { return std::cos(a); }},
          {"tan", [](double a) { return std::tan(a); }},   {"exp", [](double a) { return std::exp(a); }},
          {"log", [](double a) { return std::log(a); }},   {"sqrt", [](double a) { return std::sqrt(a); }},
          {"abs", [](double a) { return std::abs(a); }},   {"sinh", [](double a) { return std::sinh(a); }},
          {"cosh", [](double a) { return std::cosh(a); }}, {"tanh", [](double a) { return std::tanh(a); }},
      };
      auto it = table.find(name);
      if (it == table.end()) fail("unknown function '" + name + "'");
      return it->second;
    }

    const std::string &s_;
    size_t pos_ = 0;
  };

  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Value of a constant expression ("2*pi", "1e-3", "2^20").
inline double evaluate(const std::string &text) {
  Expression e(text);
  if (e.uses_coordinates()) throw ParseError("expression \"" + text + "\": x and y are not allowed here");
  return e();
}

}  // namespace sib::expr
