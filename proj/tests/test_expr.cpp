#include "doctest.h"

#include "hodohj/expr.hpp"

#include "random_expr.hpp"

#include <cmath>
#include <random>

using namespace hodohj;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("parse accepts the documented grammar") {
  const Expression e = parse("y1^2 + 2*y2", {"y1", "y2"});
  CHECK(e.dim() == 2);
  CHECK(e.evaluate(vec({3, 1})) == 11.0);

  CHECK(parse("2^3^2", {}).evaluate(Vec()) == 512.0);  // right associative
  CHECK(parse("-2^2", {}).evaluate(Vec()) == -4.0);
  CHECK(parse("2^-1", {}).evaluate(Vec()) == 0.5);
  CHECK(parse("1.5e2 + .5 + 2E-1", {}).evaluate(Vec()) == doctest::Approx(150.7));
  CHECK(parse("  pi ", {}).evaluate(Vec()) == doctest::Approx(M_PI));
  CHECK(parse("(-2)^3", {}).evaluate(Vec()) == -8.0);
}

TEST_CASE("syntax errors report the offending offset") {
  try {
    parse("y1 + * 2", {"y1"});
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 5);
    CHECK(std::string(e.what()).find("expected operand") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("", {"y1"}), SyntaxError);
  CHECK_THROWS_AS(parse("(y1 + 1", {"y1"}), SyntaxError);
  CHECK_THROWS_AS(parse("y1 y1", {"y1"}), SyntaxError);
  CHECK_THROWS_AS(parse("sin y1", {"y1"}), SyntaxError);
  CHECK_THROWS_AS(parse("1e+", {}), SyntaxError);
}

TEST_CASE("unknown identifiers are named") {
  try {
    parse("sin(z)", {"y1"});
    FAIL("expected an unknown-identifier error");
  } catch (const UnknownIdentifierError& e) {
    CHECK(e.name() == "z");
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("variable names are validated") {
  CHECK_THROWS_AS(parse("y1", {"y1", "y1"}), ValidationError);
  CHECK_THROWS_AS(parse("1", {"sin"}), ValidationError);
  CHECK_THROWS_AS(parse("1", {"pi"}), ValidationError);
  CHECK_THROWS_AS(parse("1", {"a-b"}), ValidationError);
  CHECK_THROWS_AS(parse("1", {"1a"}), ValidationError);
}

TEST_CASE("eval_jet on hand-computed cases") {
  {
    const Jet j = eval_jet(parse("y1^2 + 2*y2", {"y1", "y2"}), vec({3, 1}));
    CHECK(j.value == 11.0);
    CHECK(j.gradient == vec({6, 2}));
    CHECK(j.hessian(0, 0) == 2.0);
    CHECK(j.hessian(0, 1) == 0.0);
    CHECK(j.hessian(1, 0) == 0.0);
    CHECK(j.hessian(1, 1) == 0.0);
  }
  {
    const Jet j = eval_jet(parse("y1*y2", {"y1", "y2"}), vec({2, 5}));
    CHECK(j.value == 10.0);
    CHECK(j.gradient == vec({5, 2}));
    CHECK(j.hessian(0, 0) == 0.0);
    CHECK(j.hessian(0, 1) == 1.0);
    CHECK(j.hessian(1, 0) == 1.0);
    CHECK(j.hessian(1, 1) == 0.0);
  }
  {
    const Jet j = eval_jet(parse("sin(y1)", {"y1"}), vec({0}));
    CHECK(j.value == 0.0);
    CHECK(j.gradient[0] == 1.0);
    CHECK(j.hessian(0, 0) == 0.0);
  }
  {
    // d/dy y^y = y^y (log y + 1); at y = 1 gradient 1, hessian 2
    const Jet j = eval_jet(parse("y^y", {"y"}), vec({1}));
    CHECK(j.value == doctest::Approx(1.0));
    CHECK(j.gradient[0] == doctest::Approx(1.0));
    CHECK(j.hessian(0, 0) == doctest::Approx(2.0));
  }
  {
    const Jet j = eval_jet(parse("abs(y)", {"y"}), vec({-3}));
    CHECK(j.value == 3.0);
    CHECK(j.gradient[0] == -1.0);
  }
}

TEST_CASE("domain errors identify the subexpression") {
  try {
    parse("1 + log(y - 2)", {"y"}).eval_jet(vec({1}));
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("log((y - 2))") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("sqrt(y)", {"y"}).evaluate(vec({-1})), DomainError);
  CHECK_THROWS_AS(parse("1/y", {"y"}).evaluate(vec({0})), DomainError);
  CHECK_THROWS_AS(parse("y^0.5", {"y"}).evaluate(vec({-4})), DomainError);
  CHECK(parse("y^3", {"y"}).evaluate(vec({-2})) == -8.0);
  // value fine, derivative infinite
  CHECK(parse("sqrt(y)", {"y"}).evaluate(vec({0})) == 0.0);
  CHECK_THROWS_AS(parse("sqrt(y)", {"y"}).eval_jet(vec({0})), NonFiniteError);
  CHECK_THROWS_AS(parse("exp(y)", {"y"}).evaluate(vec({1000})), NonFiniteError);
  CHECK_THROWS_AS(parse("y", {"y"}).evaluate(vec({1, 2})), ValidationError);
}

TEST_CASE("hessians are exactly symmetric") {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 50; ++c) {
    const auto text = testing::random_expression(rng, 3);
    const Expression e = parse(text, {"y1", "y2", "y3"});
    const Vec p = testing::random_point(rng, 3);
    const Jet j = e.eval_jet(p);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) CHECK(j.hessian(a, b) == j.hessian(b, a));
    }
  }
}

TEST_CASE("forward-mode derivatives agree with central differences") {
  std::mt19937_64 rng(11);
  int cases = 0;
  for (int c = 0; c < 120; ++c) {
    const std::size_t n = 1 + c % 3;
    const auto names = indexed_names("y", n);
    const auto text = testing::random_expression(rng, n);
    const Expression e = parse(text, names);
    const Vec p = testing::random_point(rng, n);
    const auto check = testing::check_against_differences(e, p);
    INFO(text);
    CHECK(check.gradient_error <= 1e-6);
    CHECK(check.hessian_error <= 1e-6);
    ++cases;
  }
  CHECK(cases >= 100);
}

TEST_CASE("print then parse is a fixpoint") {
  std::mt19937_64 rng(13);
  for (int c = 0; c < 30; ++c) {
    const auto text = testing::random_expression(rng, 2);
    const Expression e = parse(text, {"y1", "y2"});
    const Expression back = parse(e.to_string(), {"y1", "y2"});
    CHECK(back.to_string() == e.to_string());
    for (int k = 0; k < 100; ++k) {
      const Vec p = testing::random_point(rng, 2);
      CHECK(back.evaluate(p) == e.evaluate(p));
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  const Expression e = parse("tanh(y1*y2) + exp(sin(y1))/(2 + cos(y2))", {"y1", "y2"});
  const Vec p = vec({0.3, -0.7});
  const Jet a = e.eval_jet(p);
  for (int i = 0; i < 10; ++i) {
    const Jet b = e.eval_jet(p);
    CHECK(a.value == b.value);
    CHECK(a.gradient == b.gradient);
    CHECK(a.hessian == b.hessian);
  }
}
