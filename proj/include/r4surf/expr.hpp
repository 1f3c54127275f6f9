#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "r4surf/jet.hpp"

namespace r4surf {

/// Parsed scalar expression over a small set of named variables.
struct Expr {
  enum class Kind { kConstant, kVariable, kUnary, kBinary };
  enum class Unary { kNeg, kSin, kCos, kExp, kLog, kSinh, kCosh, kSqrt };
  enum class Binary { kAdd, kSub, kMul, kDiv, kPow };

  Kind kind = Kind::kConstant;
  double value = 0.0;  // kConstant
  int variable = 0;    // kVariable: index into the parser's variable list
  Unary unary = Unary::kNeg;
  Binary binary = Binary::kAdd;
  std::vector<Expr> args;

  bool operator==(const Expr&) const = default;
};

/// Parses `src` with variables named by `variables` (default {"u", "v"}).
///
/// Grammar, loosest to tightest: + - (left), * / (left), unary -, ^ (right,
/// constant exponent). Identifiers pi and e are constants; sin cos exp log
/// sinh cosh sqrt are functions. Errors carry the byte offset.
Expr parse_expression(std::string_view src,
                      std::span<const std::string> variables = std::span<const std::string>{});

/// Fully parenthesized text that parses back to the same tree.
std::string to_string(const Expr& e, std::span<const std::string> variables =
                                         std::span<const std::string>{});

double evaluate(const Expr& e, std::span<const double> vars);
Jet2 evaluate(const Expr& e, std::span<const Jet2> vars);

/// True when the subtree references no variable.
bool is_constant(const Expr& e);

}  // namespace r4surf
