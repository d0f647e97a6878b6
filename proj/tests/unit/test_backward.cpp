#include <cmath>

#include "doctest.h"
#include "fkmc/backward.hpp"
#include "helpers.hpp"

using namespace fkmc;
using test::make_problem;

namespace {

backward::SolveOptions options(std::uint64_t n, double dt, std::uint64_t seed, int workers = 1) {
  backward::SolveOptions o;
  o.n_particles = n;
  o.dt = dt;
  o.seed = seed;
  o.workers = workers;
  return o;
}

}  // namespace

TEST_CASE("constant initial condition is reproduced exactly, for any diffusion") {
  for (const char* d : {"0.5", "x1^2+1", "0"}) {
    const auto p = make_problem(1, 1.0, {d}, "0.7");
    const auto est = backward::solve_point(p, std::vector<double>{0.3}, options(5000, 0.05, 3));
    CHECK(est.value == 0.7);  // exactly
    CHECK(est.se == 0.0);
    CHECK(est.n_faulted == 0);
  }
}

TEST_CASE("zero-variance identities") {
  // phi = 1, lambda = 0, S = 0: the estimator integrates the initial
  // condition against a probability measure.
  {
    const auto p = make_problem(1, 1.0, {"0.5"}, "1");
    const auto est = backward::solve_point(p, std::vector<double>{0.0}, options(1000, 0.1, 1));
    CHECK(est.value == 1.0);
    CHECK(est.se == 0.0);
  }
  // lambda = 1, phi = 1: contribution e^T, deterministic.
  {
    const auto p = make_problem(1, 1.0, {"0.5"}, "1", "1");
    const auto est = backward::solve_point(p, std::vector<double>{0.0}, options(1000, 0.1, 1));
    CHECK(est.value == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(est.se == 0.0);
  }
  // S = 1, phi = 0: Q = sum dt = T, deterministic.
  {
    const auto p = make_problem(1, 1.0, {"0.5"}, "0", "", "1");
    const auto est = backward::solve_point(p, std::vector<double>{0.0}, options(1000, 0.1, 1));
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.se == 0.0);
  }
}

TEST_CASE("gaussian benchmark at reduced size") {
  // Closed form: N(0,1) diffused by 2DT = 1 gives N(0, sqrt(2)); at x = 0
  // the value is 1/sqrt(4 pi). Constant coefficients, so the only error is
  // statistical.
  const auto p = test::gauss_benchmark();
  const auto est = backward::solve_point(p, std::vector<double>{0.0}, options(40000, 0.01, 1));
  CHECK(est.n_faulted == 0);
  CHECK(std::abs(est.value - 0.28209479177387814) <= 3.0 * est.se);
  CHECK(est.se < 0.002);
}

TEST_CASE("monotone dominance: non-negative data give a non-negative estimate") {
  const auto p = make_problem(1, 1.0, {"0.5*(1+0.5*tanh(x1))"}, "abs(x1)", "", "x1^2");
  const auto est = backward::solve_point(p, std::vector<double>{0.5}, options(2000, 0.05, 9));
  CHECK(est.value >= 0.0);
  CHECK(est.n_faulted == 0);
}

TEST_CASE("solve_grid is independent of the worker count") {
  const auto p = test::tanh_benchmark();
  const std::vector<std::vector<double>> points{{-1.0}, {0.0}, {0.5}, {2.0}};
  const auto a = backward::solve_grid(p, points, options(9000, 0.02, 4, 1));
  const auto b = backward::solve_grid(p, points, options(9000, 0.02, 4, 8));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);  // bit-identical
    CHECK(a[i].se == b[i].se);
  }
}

TEST_CASE("duplicate query points reproduce the same estimate") {
  const auto p = test::gauss_benchmark();
  const std::vector<std::vector<double>> points{{0.25}, {0.25}};
  const auto est = backward::solve_grid(p, points, options(3000, 0.05, 12));
  CHECK(est[0].value == est[1].value);
  CHECK(est[0].se == est[1].se);
}

TEST_CASE("per-point particle counts scale the statistical error") {
  const auto p = test::gauss_benchmark();
  const std::vector<std::vector<double>> points{{0.0}, {0.1}};
  const std::vector<std::uint64_t> n{400, 40000};
  const auto est = backward::solve_grid(p, points, options(0, 0.02, 21), n);
  // se ~ N^{-1/2}: ratio 1/10, checked statistically within 20%.
  const double ratio = est[1].se / est[0].se;
  CHECK(ratio == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("endpoint reuse equals a direct solve bit for bit") {
  const auto p = make_problem(1, 1.0, {"0.5*(1+0.5*tanh(x1))"}, test::kGaussPhi, "0.2*x1", "0.1");
  const std::vector<double> x{0.4};
  const auto opt = options(5000, 0.02, 31);

  const auto direct = backward::solve_point(p, x, opt);
  const auto set = backward::trace_endpoints(p, x, opt);
  const auto replay = backward::evaluate_with_endpoints(set, p.initial());

  CHECK(replay.value == direct.value);  // bit-identical
  CHECK(replay.se == direct.se);
  CHECK(replay.n_faulted == direct.n_faulted);
  CHECK(set.n_particles == opt.n_particles);
}

TEST_CASE("endpoints of a standstill stay at the query point") {
  const auto p = make_problem(1, 1.0, {"0"}, "1");
  const auto set = backward::trace_endpoints(p, std::vector<double>{0.8}, options(100, 0.1, 2));
  REQUIRE(set.records.size() == 100);
  for (const auto& r : set.records) CHECK(r.x0[0] == 0.8);
}

TEST_CASE("evaluation over endpoints is linear in phi") {
  const auto p = test::gauss_benchmark();  // S = 0
  const auto set = backward::trace_endpoints(p, std::vector<double>{0.0}, options(4000, 0.02, 8));

  const auto phi_a = expr::Expression::parse("exp(-x1^2/2)", 1);
  const auto phi_b = expr::Expression::parse("x1^2", 1);
  const auto phi_ab = expr::Expression::parse("exp(-x1^2/2) + x1^2", 1);

  const auto ea = backward::evaluate_with_endpoints(set, phi_a);
  const auto eb = backward::evaluate_with_endpoints(set, phi_b);
  const auto eab = backward::evaluate_with_endpoints(set, phi_ab);
  CHECK(eab.value == doctest::Approx(ea.value + eb.value).epsilon(1e-12));

  // phi = 0 and phi = 1 sanity rows.
  const auto zero = backward::evaluate_with_endpoints(set, expr::Expression::constant(0.0));
  CHECK(zero.value == 0.0);
  CHECK(zero.se == 0.0);
  const auto one = backward::evaluate_with_endpoints(set, expr::Expression::constant(1.0));
  CHECK(one.value == 1.0);
  CHECK(one.se == 0.0);
}

TEST_CASE("non-finite phi at an endpoint faults that particle only") {
  const auto p = make_problem(1, 1.0, {"0.5"}, "1");
  const auto set = backward::trace_endpoints(p, std::vector<double>{0.0}, options(2000, 0.05, 5));
  // log(x1) is non-finite for the roughly half of the endpoints left of 0.
  const auto est = backward::evaluate_with_endpoints(set, expr::Expression::parse("log(x1)", 1));
  CHECK(est.n_faulted > 0);
  CHECK(est.n_faulted < set.n_particles);
  CHECK(std::isfinite(est.value));
  CHECK(est.fault_warning);  // far more than 1%
}

TEST_CASE("all particles faulting is an error, not a zero") {
  const auto p = make_problem(1, 1.0, {"1/x1"}, "1");  // drift singular at launch
  const auto est = backward::solve_point(p, std::vector<double>{0.0}, options(100, 0.1, 7));
  CHECK(est.failed);
  CHECK(est.n_faulted == 100);
  CHECK(std::isnan(est.value));
}

TEST_CASE("precondition violations throw") {
  const auto p = test::gauss_benchmark();
  CHECK_THROWS_AS(backward::solve_point(p, std::vector<double>{0.0}, options(1, 0.1, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(backward::solve_point(p, std::vector<double>{0.0}, options(10, 0.0, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(backward::solve_point(p, std::vector<double>{0.0}, options(10, 2.0, 1)),
                  std::invalid_argument);  // dt > T
  CHECK_THROWS_AS(backward::solve_point(p, std::vector<double>{0.0, 1.0}, options(10, 0.1, 1)),
                  std::invalid_argument);  // wrong dimension
}
