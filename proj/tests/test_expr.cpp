#include <cmath>
#include <random>

#include "doctest.h"
#include "r4surf/expr.hpp"

using namespace r4surf;

namespace {

double eval_at(const std::string& src, double u, double v) {
  const double vars[] = {u, v};
  return evaluate(parse_expression(src), vars);
}

// Random expression text built from the grammar's productions.
std::string random_source(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 2);
  static const char* kFns[] = {"sin", "cos", "exp", "sinh", "cosh"};
  switch (pick(rng)) {
    case 0: return "u";
    case 1: return "v";
    case 2: return std::to_string(std::uniform_int_distribution<int>(0, 9)(rng)) + ".25";
    case 3: return random_source(rng, depth - 1) + " + " + random_source(rng, depth - 1);
    case 4: return random_source(rng, depth - 1) + "-" + random_source(rng, depth - 1);
    case 5: return random_source(rng, depth - 1) + "*" + random_source(rng, depth - 1);
    case 6: return "(" + random_source(rng, depth - 1) + ")/(2+u*u)";
    case 7: return "-" + random_source(rng, depth - 1);
    case 8: return "(" + random_source(rng, depth - 1) + ")^2";
    default:
      return std::string(kFns[std::uniform_int_distribution<int>(0, 4)(rng)]) + "(" +
             random_source(rng, depth - 1) + ")";
  }
}

}  // namespace

TEST_CASE("evaluation of simple expressions") {
  CHECK(eval_at("2*u+v", 1, 2) == 4.0);
  CHECK(eval_at("sin(u)^2+cos(u)^2", 0.7, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_at("  2 ^ 3 ^ 2 ", 0, 0) == 512.0);
  CHECK(eval_at("-u^2", 3, 0) == -9.0);
  CHECK(eval_at("u/2/2", 8, 0) == 2.0);
  CHECK(eval_at("u-v-1", 5, 1) == 3.0);
  CHECK(eval_at("2^-1", 0, 0) == 0.5);
  CHECK(eval_at("pi", 0, 0) == doctest::Approx(M_PI));
  CHECK(eval_at("e", 0, 0) == doctest::Approx(M_E));
  CHECK(eval_at("1.5e2 + 1e-1", 0, 0) == doctest::Approx(150.1));
  CHECK(eval_at("sqrt(u)*log(exp(v))", 4, 3) == doctest::Approx(6.0));
  CHECK(eval_at("u^(1/3)", 8, 0) == doctest::Approx(2.0));
}

TEST_CASE("function application binds to its parenthesized argument") {
  const Expr e = parse_expression("u*cos(v)");
  REQUIRE(e.kind == Expr::Kind::kBinary);
  CHECK(e.binary == Expr::Binary::kMul);
  CHECK(e.args[0].kind == Expr::Kind::kVariable);
  CHECK(e.args[0].variable == 0);
  REQUIRE(e.args[1].kind == Expr::Kind::kUnary);
  CHECK(e.args[1].unary == Expr::Unary::kCos);
  CHECK(e.args[1].args[0].variable == 1);
}

TEST_CASE("parse errors report byte offsets") {
  auto offset_of = [](const std::string& src) -> std::size_t {
    try {
      parse_expression(src);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return std::string::npos;
  };
  CHECK(offset_of("") == 0);
  CHECK(offset_of("   ") == 3);
  CHECK(offset_of("u + w") == 4);
  CHECK(offset_of("(u + v") == 0);
  CHECK(offset_of("u + v)") == 5);
  CHECK(offset_of("sin(u") == 3);
  CHECK(offset_of("u ^ v") == 4);
  CHECK(offset_of("tan(u)") == 0);
  CHECK_THROWS_WITH_AS(parse_expression("x"), "unknown identifier 'x' at offset 0", ParseError);
}

TEST_CASE("custom variable names") {
  const std::vector<std::string> vars{"t"};
  const Expr e = parse_expression("2*cos(t)", vars);
  const double t[] = {0.0};
  CHECK(evaluate(e, t) == 2.0);
  CHECK_THROWS_AS(parse_expression("u", vars), ParseError);
  CHECK(to_string(e, vars) == "(2 * cos(t))");
}

TEST_CASE("jet evaluation matches analytic derivatives") {
  const Expr e = parse_expression("u*cos(v)");
  const Jet2 vars[] = {Jet2::variable_u(2.0, 2), Jet2::variable_v(0.5, 2)};
  const Jet2 j = evaluate(e, vars);
  CHECK(j.value() == doctest::Approx(2.0 * std::cos(0.5)));
  CHECK(j.derivative(1, 0) == doctest::Approx(std::cos(0.5)));
  CHECK(j.derivative(1, 1) == doctest::Approx(-std::sin(0.5)));
  CHECK(j.derivative(0, 2) == doctest::Approx(-2.0 * std::cos(0.5)));
}

TEST_CASE("property: printed trees reparse to identical trees") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string src = random_source(rng, 4);
    const Expr e = parse_expression(src);
    const Expr again = parse_expression(to_string(e));
    CHECK_MESSAGE(again == e, src);
  }
}
