#include <cmath>

#include "doctest.h"
#include "fkmc/expr.hpp"
#include "fkmc/rng.hpp"

using fkmc::expr::Expression;
using fkmc::expr::ParseError;
using fkmc::expr::central_difference;

namespace {

double ev(const Expression& e, std::initializer_list<double> x, double t = 0.0) {
  return e.eval(std::span<const double>(x.begin(), x.size()), t);
}

}  // namespace

TEST_CASE("parse and evaluate basics") {
  const auto e = Expression::parse("2*x1 + exp(-t)", 1);
  CHECK(ev(e, {3.0}, 0.0) == 7.0);

  CHECK(ev(Expression::parse("x1^2", 1), {1.5}) == 2.25);
  CHECK(ev(Expression::parse("exp(t)", 1), {0.0}, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

  // Division by zero propagates as +inf; callers flag it downstream.
  CHECK(ev(Expression::parse("1/x1", 1), {0.0}) == std::numeric_limits<double>::infinity());
  CHECK(std::isnan(ev(Expression::parse("log(x1)", 1), {-1.0})));
}

TEST_CASE("operator precedence") {
  CHECK(ev(Expression::parse("2+3*4", 1), {0.0}) == 14.0);
  CHECK(ev(Expression::parse("2^3^2", 1), {0.0}) == 512.0);   // right-associative
  CHECK(ev(Expression::parse("-2^2", 1), {0.0}) == -4.0);     // '^' binds tighter than unary -
  CHECK(ev(Expression::parse("2^-1", 1), {0.0}) == 0.5);
  CHECK(ev(Expression::parse("6/3/2", 1), {0.0}) == 1.0);
  CHECK(ev(Expression::parse("1-2-3", 1), {0.0}) == -4.0);
  CHECK(ev(Expression::parse("(2^3)^2", 1), {0.0}) == 64.0);
}

TEST_CASE("numeric literals") {
  CHECK(ev(Expression::parse("1.5e-3", 1), {0.0}) == 1.5e-3);
  CHECK(ev(Expression::parse("2E3", 1), {0.0}) == 2000.0);
  CHECK(ev(Expression::parse(".5", 1), {0.0}) == 0.5);
  CHECK(ev(Expression::parse("5.", 1), {0.0}) == 5.0);
  CHECK(ev(Expression::parse("1e0", 1), {0.0}) == 1.0);
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(Expression::parse("", 1), ParseError);
  try {
    Expression::parse("sin(", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
  }
  CHECK_THROWS_AS(Expression::parse("2*", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("(1+2", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("foo(1)", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("x0", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("2 3", 1), ParseError);
  CHECK_THROWS_WITH_AS(Expression::parse("x2", 1),
                       doctest::Contains("exceeds dimension"), ParseError);
  CHECK_NOTHROW(Expression::parse("x2", 2));
}

TEST_CASE("differentiate: exact rules with constant folding") {
  const auto sq = Expression::parse("x1^2", 1);
  CHECK(ev(sq.differentiate(0), {1.5}) == 3.0);

  const auto c = Expression::parse("4.25", 1).differentiate(0);
  CHECK(c.is_literal_zero());
  CHECK(ev(c, {123.0}) == 0.0);

  // d/dx exp(2x) at 0.3 = 2 e^0.6
  const auto de = Expression::parse("exp(2*x1)", 1).differentiate(0);
  CHECK(ev(de, {0.3}) == doctest::Approx(3.6442376007810178).epsilon(1e-12));

  // Power rule keeps negative bases usable (the log form would NaN).
  const auto dsq = Expression::parse("x1^2", 1).differentiate(0);
  CHECK(ev(dsq, {-1.0}) == -2.0);

  // Time derivative.
  const auto dt = Expression::parse("x1*t^2", 1).differentiate(fkmc::expr::kTimeVar);
  CHECK(ev(dt, {3.0}, 2.0) == 12.0);
}

TEST_CASE("differentiate agrees with central differences") {
  // Randomized point suite away from singularities (positive x, modest t).
  const char* exprs[] = {
      "x1^2",
      "exp(2*x1)",
      "log(x1+2)",
      "sin(x1*t)",
      "cos(x1)-sin(t)",
      "tanh(3*x1)",
      "sqrt(x1+1.5)",
      "abs(x1)+x1^3",
      "x1/(1+t)",
      "(x1+t)^2.5",
      "2^x1",
      "x1^t",
      "exp(-x1^2/2)/sqrt(2*3.141592653589793)",
      "1/x1",
      "-x1^2+x1*t",
  };
  fkmc::rng::RandomStream pts(fkmc::rng::stream_key(20240817, 1, 0), 0);
  for (const char* text : exprs) {
    const auto e = Expression::parse(text, 1);
    const auto de = e.differentiate(0);
    for (int k = 0; k < 12; ++k) {
      const double x = 0.3 + 1.7 * pts.next_uniform();
      const double t = 0.1 + 0.9 * pts.next_uniform();
      const double sym = ev(de, {x}, t);
      const double fd = central_difference(e, std::span<const double>(&x, 1), t, 0, 1e-5);
      const double val = ev(e, {x}, t);
      CHECK_MESSAGE(std::abs(sym - fd) <= 1e-5 * (1.0 + std::abs(val)),
                    text, " at x=", x, " t=", t, ": sym=", sym, " fd=", fd);
    }
  }
}

TEST_CASE("print round-trips to an identical evaluator") {
  const char* exprs[] = {
      "2*x1 + exp(-t)",
      "-2^2",
      "2^3^2",
      "(x1+1)*(x1-1)/(x1^2+1)",
      "abs(-x1)^2",
      "1-2-3",
      "6/3/2",
      "x1^-2",
      "exp(-x1^2/2)/sqrt(2*3.141592653589793)",
      "tanh(x1*t)-cos(x1)^2",
      "1/0",
  };
  fkmc::rng::RandomStream pts(fkmc::rng::stream_key(20240817, 2, 0), 1);
  for (const char* text : exprs) {
    const auto e = Expression::parse(text, 1);
    const auto round = Expression::parse(e.to_string(), 1);
    for (int k = 0; k < 100; ++k) {
      const double x = -4.0 + 8.0 * pts.next_uniform();
      const double t = 2.0 * pts.next_uniform();
      const double a = ev(e, {x}, t);
      const double b = ev(round, {x}, t);
      if (std::isnan(a)) {
        CHECK(std::isnan(b));
      } else {
        CHECK(a == b);  // bit-identical
      }
    }
  }
  // Derivative trees round-trip too.
  const auto d = Expression::parse("x1^t*sqrt(x1)", 1).differentiate(0);
  const auto round = Expression::parse(d.to_string(), 1);
  for (int k = 0; k < 100; ++k) {
    const double x = 0.2 + 2.0 * pts.next_uniform();
    const double t = 2.0 * pts.next_uniform();
    CHECK(ev(d, {x}, t) == ev(round, {x}, t));
  }
}

TEST_CASE("evaluation is bit-stable across calls") {
  const auto e = Expression::parse("sin(x1)*exp(-t/3)+x1^1.5", 1);
  const double a = ev(e, {1.7}, 0.4);
  for (int i = 0; i < 10; ++i) CHECK(ev(e, {1.7}, 0.4) == a);
}

TEST_CASE("multi-dimensional variables") {
  const auto e = Expression::parse("x1*x2 + x2^2", 2);
  CHECK(ev(e, {2.0, 3.0}) == 15.0);
  const auto d2 = e.differentiate(1);
  CHECK(ev(d2, {2.0, 3.0}) == 8.0);  // x1 + 2 x2
}
