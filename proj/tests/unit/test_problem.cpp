#include <cmath>

#include "doctest.h"
#include "fkmc/problem.hpp"
#include "fkmc/rng.hpp"
#include "helpers.hpp"

using namespace fkmc;
using test::make_problem;

TEST_CASE("validate accepts a healthy 1-D spec and rejects negative diffusion") {
  const auto good = make_problem(1, 1.0, {"0.5"}, "1", "", "", {{-2.0, 2.0}});
  CHECK_NOTHROW(good.validate());

  const auto bad = make_problem(1, 1.0, {"-1"}, "1", "", "", {{-2.0, 2.0}});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("validate rejects an indefinite 2-D diffusion matrix") {
  // 2D = [[2,4],[4,2]] has eigenvalues 6 and -2.
  const auto p = make_problem(2, 1.0, {"1", "2", "1"}, "1", "", "", {{-1.0, 1.0}, {-1.0, 1.0}});
  CHECK_THROWS_AS(p.validate(), ValidationError);
  const auto q = make_problem(2, 1.0, {"1+0*x1", "2", "1"}, "1", "", "",
                              {{-1.0, 1.0}, {-1.0, 1.0}});
  CHECK_THROWS_AS(q.validate(), ValidationError);
}

TEST_CASE("validate reports the failing coefficient") {
  const auto p = make_problem(1, 1.0, {"x1^0.5"}, "1", "", "", {{-8.0, 8.0}});
  try {
    p.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    // Either the coefficient itself or its symbolic derivative (the drift)
    // blows up first, depending on the sample ordering.
    const bool named = e.coefficient == "D.1.1" || e.coefficient == "drift.1";
    CHECK(named);
    CHECK(e.point.size() == 1);
  }
}

TEST_CASE("drift of constant diffusion vanishes") {
  const auto p = make_problem(1, 1.0, {"0.5"}, "1");
  double mu = -1.0;
  CHECK(p.drift(std::vector<double>{2.0}, 0.3, std::span<double>(&mu, 1)));
  CHECK(mu == 0.0);
  CHECK(p.constant_coefficients());
}

TEST_CASE("drift is the symbolic divergence of D") {
  const auto p = make_problem(1, 1.0, {"x1^2"}, "1");
  double mu = 0.0;
  CHECK(p.drift(std::vector<double>{1.5}, 0.0, std::span<double>(&mu, 1)));
  CHECK(mu == 3.0);

  // 2-D: D11 = x1 x2, D12 = 0, D22 = 1 -> mu = (x2, 0) = (3, 0) at (2,3).
  const auto q = make_problem(2, 1.0, {"x1*x2", "0", "1"}, "1");
  std::array<double, 2> mu2{};
  CHECK(q.drift(std::vector<double>{2.0, 3.0}, 0.0, mu2));
  CHECK(mu2[0] == 3.0);
  CHECK(mu2[1] == 0.0);

  // Cross-check against central differences of D.
  const auto& d11 = q.diffusion_entry(0, 0);
  const double fd =
      expr::central_difference(d11, std::vector<double>{2.0, 3.0}, 0.0, 0, 1e-5);
  CHECK(mu2[0] == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("drift matches finite differences on a smooth variable spec") {
  const auto p = test::tanh_benchmark();
  const auto& d = p.diffusion_entry(0, 0);
  for (double x : {-2.0, -0.5, 0.0, 0.7, 1.9}) {
    double mu = 0.0;
    REQUIRE(p.drift(std::span<const double>(&x, 1), 0.0, std::span<double>(&mu, 1)));
    const double fd = expr::central_difference(d, std::span<const double>(&x, 1), 0.0, 0, 1e-5);
    CHECK(mu == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("diffusion factor: scalar and correlated cases") {
  DiffusionFactor f;
  const auto p1 = make_problem(1, 1.0, {"0.5"}, "1");
  REQUIRE(p1.diffusion_factor(std::vector<double>{0.0}, 0.0, f));
  CHECK(f(0, 0) == 1.0);  // sqrt(2 * 0.5)

  const auto p2 = make_problem(2, 1.0, {"1", "0.5", "1"}, "1");
  REQUIRE(p2.diffusion_factor(std::vector<double>{0.0, 0.0}, 0.0, f));
  CHECK(f(0, 0) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(f(1, 0) == doctest::Approx(0.7071067811865475).epsilon(1e-15));
  CHECK(f(1, 1) == doctest::Approx(1.224744871391589).epsilon(1e-15));

  const auto pid = make_problem(2, 1.0, {"0.5", "0", "0.5"}, "1");
  REQUIRE(pid.diffusion_factor(std::vector<double>{0.0, 0.0}, 0.0, f));
  CHECK(f(0, 0) == 1.0);
  CHECK(f(1, 0) == 0.0);
  CHECK(f(1, 1) == 1.0);
}

TEST_CASE("semi-definite diffusion is clamped, not rejected") {
  // 2D = [[4,2],[2,1]]: rank one; the trailing pivot is exactly zero.
  const auto rank1 = make_problem(2, 1.0, {"2", "1", "0.5"}, "1");
  DiffusionFactor g;
  REQUIRE(rank1.diffusion_factor(std::vector<double>{0.0, 0.0}, 0.0, g));
  CHECK(g(0, 0) == 2.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(1, 1) == 0.0);

  // 2D = [[2,2],[2,2]]: rank one up to rounding in the pivot.
  const auto p = make_problem(2, 1.0, {"1", "1", "1"}, "1");
  DiffusionFactor f;
  REQUIRE(p.diffusion_factor(std::vector<double>{0.0, 0.0}, 0.0, f));
  CHECK(std::abs(f(1, 1)) < 1e-7);
  // A A^T reproduces 2D.
  CHECK(f(0, 0) * f(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f(1, 0) * f(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f(1, 0) * f(1, 0) + f(1, 1) * f(1, 1) == doctest::Approx(2.0).epsilon(1e-14));

  const auto zero = make_problem(1, 1.0, {"0"}, "1");
  REQUIRE(zero.diffusion_factor(std::vector<double>{0.0}, 0.0, f));
  CHECK(f(0, 0) == 0.0);
}

TEST_CASE("factor residual invariant on random PSD matrices") {
  rng::RandomStream r(rng::stream_key(77, 3, 0), 0);
  for (int rep = 0; rep < 25; ++rep) {
    const int d = 1 + static_cast<int>(r.next_uniform() * 4.0);
    // D = B B^T / 2 built from a random matrix B, so 2D is PSD.
    std::vector<std::vector<double>> b(d, std::vector<double>(d));
    for (auto& row : b)
      for (auto& v : row) v = 2.0 * r.next_uniform() - 1.0;
    Problem::Spec spec;
    spec.dimension = d;
    spec.horizon = 1.0;
    double max_entry = 0.0;
    std::vector<std::vector<double>> m(d, std::vector<double>(d, 0.0));
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += b[k][j] * b[l][j];
        m[k][l] = s;  // 2D
        max_entry = std::max(max_entry, std::abs(s));
      }
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l)
        spec.diffusion.push_back(expr::Expression::constant(0.5 * m[k][l]));
    spec.initial = expr::Expression::constant(1.0);
    const Problem p(std::move(spec));

    DiffusionFactor f;
    std::vector<double> x(d, 0.0);
    REQUIRE(p.diffusion_factor(x, 0.0, f));
    for (int k = 0; k < d; ++k)
      for (int l = 0; l <= k; ++l) {
        double s = 0.0;
        for (int j = 0; j <= l; ++j) s += f(k, j) * f(l, j);
        CHECK(std::abs(s - m[k][l]) <= 1e-12 * (1.0 + max_entry));
      }
  }
}

TEST_CASE("symmetric storage answers (l,k) like (k,l)") {
  const auto p = make_problem(2, 1.0, {"x1", "x1*x2", "x2"}, "1");
  const std::vector<double> x{1.3, -0.7};
  CHECK(p.diffusion_entry(0, 1).eval(x, 0.0) == p.diffusion_entry(1, 0).eval(x, 0.0));
}

TEST_CASE("constructor rejects malformed specs") {
  CHECK_THROWS_AS(make_problem(0, 1.0, {}, "1"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem(1, 0.0, {"1"}, "1"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem(1, -1.0, {"1"}, "1"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem(2, 1.0, {"1"}, "1"), std::invalid_argument);
}

TEST_CASE("halton samples stay inside the box") {
  const auto samples = halton_samples({{-2.0, 3.0}, {0.0, 1.0}}, 2.0, 128);
  CHECK(samples.size() == 128);
  for (const auto& [x, t] : samples) {
    CHECK(x[0] >= -2.0);
    CHECK(x[0] <= 3.0);
    CHECK(x[1] >= 0.0);
    CHECK(x[1] <= 1.0);
    CHECK(t >= 0.0);
    CHECK(t <= 2.0);
  }
}
