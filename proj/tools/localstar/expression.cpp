#include "expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace localstar::cli {

using C = std::complex<double>;

struct Expression::Node {
  enum Kind { Number, Variable, Unary, Binary, Call } kind = Number;
  C value{};
  std::size_t slot = 0;
  char op = 0;
  std::string name;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return n;
  }

 private:
  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument(fmt::format("expression '{}': {} at position {}", s_, what, pos_));
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
  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Expression::Node::Binary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }
  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) {
        n = binary('+', n, term());
      } else if (eat('-')) {
        n = binary('-', n, term());
      } else {
        return n;
      }
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) {
        n = binary('*', n, unary());
      } else if (eat('/')) {
        n = binary('/', n, unary());
      } else {
        return n;
      }
    }
  }
  NodePtr unary() {
    if (eat('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Expression::Node::Unary;
      n->op = '-';
      n->args = {unary()};
      return n;
    }
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return binary('^', base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = s_.substr(start, pos_ - start);
      if (eat('(')) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Expression::Node::Call;
        n->name = name;
        if (!eat(')')) {
          do {
            n->args.push_back(expr());
          } while (eat(','));
          if (!eat(')')) fail("missing ')' after arguments");
        }
        check_call(*n);
        return n;
      }
      for (std::size_t k = 0; k < vars_.size(); ++k) {
        if (vars_[k] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->kind = Expression::Node::Variable;
          n->slot = k;
          return n;
        }
      }
      auto n = std::make_shared<Expression::Node>();
      if (name == "pi") {
        n->value = std::numbers::pi;
      } else if (name == "i") {
        n->value = C(0.0, 1.0);
      } else {
        fail(fmt::format("unknown name '{}'", name));
      }
      return n;
    }
    fail("unexpected character");
  }
  void check_call(const Expression::Node& n) const {
    static const char* unary_fns[] = {"exp", "log", "sqrt", "sin", "cos", "tan",
                                      "tanh", "abs", "re", "im", "conj", "step"};
    for (const char* f : unary_fns) {
      if (n.name == f) {
        if (n.args.size() != 1) fail(fmt::format("{} takes one argument", n.name));
        return;
      }
    }
    if (n.name == "bump") {
      if (n.args.size() < 2 || n.args.size() - 1 > vars_.size()) fail("bump takes a centre and a width");
      return;
    }
    if (n.name == "plateau") {
      if (n.args.size() < 3 || n.args.size() - 2 > vars_.size()) {
        fail("plateau takes a centre, a radius and a width");
      }
      return;
    }
    fail(fmt::format("unknown function '{}'", n.name));
  }
};

C eval(const Expression::Node& n, const double* x) {
  switch (n.kind) {
    case Expression::Node::Number:
      return n.value;
    case Expression::Node::Variable:
      return x[n.slot];
    case Expression::Node::Unary:
      return -eval(*n.args[0], x);
    case Expression::Node::Binary: {
      const C a = eval(*n.args[0], x);
      const C b = eval(*n.args[1], x);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default:
          if (b.imag() == 0.0 && a.imag() == 0.0 && (a.real() >= 0.0 || b.real() == std::round(b.real()))) {
            return std::pow(a.real(), b.real());
          }
          return std::pow(a, b);
      }
    }
    case Expression::Node::Call:
      break;
  }
  const std::string& f = n.name;
  if (f == "bump" || f == "plateau") {
    const std::size_t dims = n.args.size() - (f == "bump" ? 1 : 2);
    double r2 = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double d = x[k] - eval(*n.args[k], x).real();
      r2 += d * d;
    }
    if (f == "bump") {
      const double s = eval(*n.args[dims], x).real();
      return std::exp(-r2 / (2.0 * s * s));
    }
    const double r = eval(*n.args[dims], x).real();
    const double w = eval(*n.args[dims + 1], x).real();
    return 1.0 - smooth_step((std::sqrt(r2) - r) / w);
  }
  const C a = eval(*n.args[0], x);
  if (f == "exp") return std::exp(a);
  if (f == "log") return std::log(a);
  if (f == "sqrt") return std::sqrt(a);
  if (f == "sin") return std::sin(a);
  if (f == "cos") return std::cos(a);
  if (f == "tan") return std::tan(a);
  if (f == "tanh") return std::tanh(a);
  if (f == "abs") return std::abs(a);
  if (f == "re") return a.real();
  if (f == "im") return a.imag();
  if (f == "conj") return std::conj(a);
  return smooth_step(a.real());  // step
}

}  // namespace

Expression::Expression(const std::string& text, std::vector<std::string> variables)
    : text_(text), variables_(std::move(variables)) {
  Parser p(text_, variables_);
  root_ = p.parse();
}

std::complex<double> Expression::operator()(const double* values) const {
  if (!root_) return {};
  return eval(*root_, values);
}

std::vector<std::vector<Expression>> parse_matrix(const std::string& text,
                                                  const std::vector<std::string>& variables) {
  std::vector<std::vector<Expression>> rows;
  std::size_t start = 0;
  for (;;) {
    const std::size_t semi = text.find(';', start);
    const std::string row = text.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
    std::vector<Expression> entries;
    int depth = 0;
    std::size_t from = 0;
    for (std::size_t k = 0; k <= row.size(); ++k) {
      if (k < row.size() && row[k] == '(') ++depth;
      if (k < row.size() && row[k] == ')') --depth;
      if (k == row.size() || (row[k] == ',' && depth == 0)) {
        entries.emplace_back(row.substr(from, k - from), variables);
        from = k + 1;
      }
    }
    rows.push_back(std::move(entries));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) {
      throw std::invalid_argument(fmt::format("matrix '{}' has ragged rows", text));
    }
  }
  return rows;
}

}  // namespace localstar::cli
