#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace localstar::cli {

/// Closed-form complex expressions over named real variables.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Constants: pi, i. Functions: exp, log, sqrt, sin, cos, tan, tanh, abs,
/// re, im, conj, step(s) (smooth 0 -> 1 on [0, 1]),
/// bump(c1, .., cn, s) = exp(-|x - c|^2 / (2 s^2)) over the first n variables,
/// plateau(c1, .., cn, r, w) = 1 - step((|x - c| - r) / w).
class Expression {
 public:
  Expression() = default;
  /// Throws std::invalid_argument with the offending position.
  Expression(const std::string& text, std::vector<std::string> variables);

  std::complex<double> operator()(const double* values) const;
  const std::string& text() const { return text_; }
  const std::vector<std::string>& variables() const { return variables_; }
  bool empty() const { return !root_; }

  struct Node;

 private:
  std::string text_;
  std::vector<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

/// "a, b; c, d" -> rows of expressions.
std::vector<std::vector<Expression>> parse_matrix(const std::string& text,
                                                  const std::vector<std::string>& variables);

}  // namespace localstar::cli
