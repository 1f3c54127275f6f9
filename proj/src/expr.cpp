#include "r4surf/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace r4surf {

namespace {

const std::vector<std::string>& default_variables() {
  static const std::vector<std::string> vars{"u", "v"};
  return vars;
}

std::span<const std::string> resolve(std::span<const std::string> vars) {
  return vars.empty() ? std::span<const std::string>(default_variables()) : vars;
}

struct FunctionName {
  const char* name;
  Expr::Unary op;
};

constexpr FunctionName kFunctions[] = {
    {"sin", Expr::Unary::kSin},   {"cos", Expr::Unary::kCos},   {"exp", Expr::Unary::kExp},
    {"log", Expr::Unary::kLog},   {"sinh", Expr::Unary::kSinh}, {"cosh", Expr::Unary::kCosh},
    {"sqrt", Expr::Unary::kSqrt},
};

Expr make_constant(double v) {
  Expr e;
  e.kind = Expr::Kind::kConstant;
  e.value = v;
  return e;
}

Expr make_unary(Expr::Unary op, Expr arg) {
  Expr e;
  e.kind = Expr::Kind::kUnary;
  e.unary = op;
  e.args.push_back(std::move(arg));
  return e;
}

Expr make_binary(Expr::Binary op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Expr::Kind::kBinary;
  e.binary = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> vars) : src_(src), vars_(vars) {}

  Expr parse() {
    skip_space();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    Expr e = parse_sum();
    skip_space();
    if (pos_ != src_.size()) {
      if (src_[pos_] == ')') throw ParseError("unbalanced parenthesis", pos_);
      throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
    }
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Expr::Binary::kAdd, std::move(lhs), parse_product());
      } else if (accept('-')) {
        lhs = make_binary(Expr::Binary::kSub, std::move(lhs), parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Expr::Binary::kMul, std::move(lhs), parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Expr::Binary::kDiv, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return make_unary(Expr::Unary::kNeg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    skip_space();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t at = pos_;
    Expr exponent = parse_unary();
    if (!is_constant(exponent)) throw ParseError("exponent must be constant", at);
    return make_binary(Expr::Binary::kPow, std::move(base),
                       make_constant(evaluate(exponent, std::span<const double>{})));
  }

  Expr parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      skip_space();
      if (pos_ < src_.size() && src_[pos_] == ')') throw ParseError("empty parentheses", pos_);
      Expr inner = parse_sum();
      if (!accept(')')) throw ParseError("unbalanced parenthesis", open);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == ')') throw ParseError("unbalanced parenthesis", pos_);
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError("malformed number", start);
    // Exponent only when digits follow, so "2e" stays a product-free error below.
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        digits();
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    return make_constant(std::strtod(text.c_str(), nullptr));
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      if (name == vars_[k]) {
        Expr e;
        e.kind = Expr::Kind::kVariable;
        e.variable = static_cast<int>(k);
        return e;
      }
    }
    if (name == "pi") return make_constant(std::numbers::pi);
    if (name == "e") return make_constant(std::numbers::e);
    for (const auto& fn : kFunctions) {
      if (name == fn.name) {
        if (!accept('(')) throw ParseError("expected '(' after " + std::string(name), pos_);
        const std::size_t open = pos_ - 1;
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == ')') throw ParseError("empty argument", pos_);
        Expr arg = parse_sum();
        if (!accept(')')) throw ParseError("unbalanced parenthesis", open);
        return make_unary(fn.op, std::move(arg));
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  std::span<const std::string> vars_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0 || s.find_first_of("ni") != std::string::npos) return "(" + s + ")";
  return s;
}

template <typename T>
T apply_unary(Expr::Unary op, const T& a) {
  using std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh, std::sqrt;
  switch (op) {
    case Expr::Unary::kNeg: return -a;
    case Expr::Unary::kSin: return sin(a);
    case Expr::Unary::kCos: return cos(a);
    case Expr::Unary::kExp: return exp(a);
    case Expr::Unary::kLog: return log(a);
    case Expr::Unary::kSinh: return sinh(a);
    case Expr::Unary::kCosh: return cosh(a);
    case Expr::Unary::kSqrt: return sqrt(a);
  }
  return a;
}

template <typename T>
T eval_impl(const Expr& e, std::span<const T> vars, int order) {
  switch (e.kind) {
    case Expr::Kind::kConstant:
      if constexpr (std::is_same_v<T, double>) {
        return e.value;
      } else {
        return T::constant(e.value, order);
      }
    case Expr::Kind::kVariable:
      if (static_cast<std::size_t>(e.variable) >= vars.size()) {
        throw Error("expression variable not bound");
      }
      return vars[static_cast<std::size_t>(e.variable)];
    case Expr::Kind::kUnary:
      return apply_unary(e.unary, eval_impl(e.args[0], vars, order));
    case Expr::Kind::kBinary: {
      const T a = eval_impl(e.args[0], vars, order);
      if (e.binary == Expr::Binary::kPow) {
        using std::pow;
        return pow(a, e.args[1].value);
      }
      const T b = eval_impl(e.args[1], vars, order);
      switch (e.binary) {
        case Expr::Binary::kAdd: return a + b;
        case Expr::Binary::kSub: return a - b;
        case Expr::Binary::kMul: return a * b;
        case Expr::Binary::kDiv: return a / b;
        case Expr::Binary::kPow: break;
      }
    }
  }
  throw Error("malformed expression tree");
}

}  // namespace

Expr parse_expression(std::string_view src, std::span<const std::string> variables) {
  return Parser(src, resolve(variables)).parse();
}

bool is_constant(const Expr& e) {
  if (e.kind == Expr::Kind::kVariable) return false;
  for (const auto& a : e.args) {
    if (!is_constant(a)) return false;
  }
  return true;
}

std::string to_string(const Expr& e, std::span<const std::string> variables) {
  const auto vars = resolve(variables);
  switch (e.kind) {
    case Expr::Kind::kConstant:
      return format_number(e.value);
    case Expr::Kind::kVariable:
      return vars[static_cast<std::size_t>(e.variable)];
    case Expr::Kind::kUnary: {
      const std::string inner = to_string(e.args[0], vars);
      if (e.unary == Expr::Unary::kNeg) return "(-" + inner + ")";
      for (const auto& fn : kFunctions) {
        if (fn.op == e.unary) return std::string(fn.name) + "(" + inner + ")";
      }
      break;
    }
    case Expr::Kind::kBinary: {
      static constexpr const char* kOps[] = {" + ", " - ", " * ", " / ", "^"};
      return "(" + to_string(e.args[0], vars) + kOps[static_cast<int>(e.binary)] +
             to_string(e.args[1], vars) + ")";
    }
  }
  throw Error("malformed expression tree");
}

double evaluate(const Expr& e, std::span<const double> vars) {
  return eval_impl<double>(e, vars, 0);
}

Jet2 evaluate(const Expr& e, std::span<const Jet2> vars) {
  const int order = vars.empty() ? 0 : vars.front().order();
  return eval_impl<Jet2>(e, vars, order);
}

}  // namespace r4surf
