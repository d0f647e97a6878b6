#include <cmath>

#include "doctest.h"
#include "fkmc/reference.hpp"
#include "helpers.hpp"

using namespace fkmc;
using test::make_problem;

TEST_CASE("gaussian oracle closed form") {
  // Variance addition under Gaussian convolution: 1 + 2*0.5*1 = 2.
  CHECK(reference::gaussian_oracle(0.5, 1.0, 0.0, 1.0, 0.0) ==
        doctest::Approx(0.28209479177387814).epsilon(1e-15));
  // T = 0 returns phi itself.
  for (double x : {-1.3, 0.0, 0.8})
    CHECK(reference::gaussian_oracle(0.7, 1.0, x, 0.0, 0.0) ==
          doctest::Approx(std::exp(-x * x / 2.0) / std::sqrt(2.0 * 3.141592653589793))
              .epsilon(1e-15));
  // Pure reaction scaling.
  CHECK(reference::gaussian_oracle(0.0, 1.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(1.0844375514192277).epsilon(1e-12));
  CHECK_THROWS_AS(reference::gaussian_oracle(-0.1, 1.0, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(reference::gaussian_oracle(0.5, 0.0, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("1-D Crank-Nicolson matches the gaussian oracle") {
  const auto p = test::gauss_benchmark();
  reference::FdOptions opt;
  opt.box = {{-8.0, 8.0}};
  opt.nodes = {1601, 0};
  opt.time_steps = 1000;
  const auto sol = reference::fd_solve(p, opt);
  CHECK(sol.warnings.empty());

  const double at0 = sol.value(std::vector<double>{0.0});
  CHECK(std::abs(at0 - 0.28209479177387814) < 1e-4);

  // Self-convergence: halving h and dt moves the value by < 2.5e-5.
  const double delta = reference::fd_self_convergence(p, opt, std::vector<double>{0.0});
  CHECK(delta < 2.5e-5);
}

TEST_CASE("uniform source integrates to T in the deep interior") {
  const auto p = make_problem(1, 1.0, {"0.5"}, "0", "", "1");
  reference::FdOptions opt;
  opt.box = {{-8.0, 8.0}};
  opt.nodes = {801, 0};
  opt.time_steps = 400;
  const auto sol = reference::fd_solve(p, opt);
  for (double x : {-1.0, 0.0, 1.0})
    CHECK(sol.value(std::vector<double>{x}) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spatial accuracy is second order") {
  const auto p = test::gauss_benchmark();
  reference::FdOptions coarse;
  coarse.box = {{-8.0, 8.0}};
  coarse.nodes = {201, 0};
  coarse.time_steps = 100;
  reference::FdOptions fine = coarse;
  fine.nodes = {401, 0};
  fine.time_steps = 200;

  const double exact = 0.28209479177387814;
  const double e_coarse = std::abs(reference::fd_solve(p, coarse).value(std::vector<double>{0.0}) - exact);
  const double e_fine = std::abs(reference::fd_solve(p, fine).value(std::vector<double>{0.0}) - exact);
  CHECK(e_coarse / e_fine == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("richardson ratio sits in the second-order window") {
  const auto p = test::tanh_benchmark();
  reference::FdOptions opt;
  opt.box = {{-8.0, 8.0}};
  opt.nodes = {201, 0};
  opt.time_steps = 100;
  const double ratio = reference::fd_richardson_ratio(p, opt, std::vector<double>{0.0});
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("flux form conserves mass before boundary leakage") {
  const auto p = test::tanh_benchmark();
  reference::FdOptions opt;
  opt.box = {{-8.0, 8.0}};
  opt.nodes = {801, 0};
  opt.time_steps = 400;
  const auto sol = reference::fd_solve(p, opt);
  const double h = sol.axes[0][1] - sol.axes[0][0];
  double mass = 0.0;
  for (double v : sol.values) mass += v * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));  // integral of phi
}

TEST_CASE("2-D explicit scheme with correlated diffusion matches the closed form") {
  // D = 0.25 [[1, .5], [.5, 1]], phi = 2-D standard normal, T = 0.5:
  // f(x, T) = N(0, Sigma) with Sigma = I + 2 D T = [[1.25, .125], [.125, 1.25]].
  const auto p = make_problem(2, 0.5, {"0.25", "0.125", "0.25"},
                              "exp(-(x1^2+x2^2)/2)/(2*3.141592653589793)");
  reference::FdOptions opt;
  opt.box = {{-6.5, 6.5}, {-6.5, 6.5}};
  opt.nodes = {131, 131};
  opt.time_steps = 250;  // dt = 0.002 <= h^2/(4 max D) = 0.01
  const auto sol = reference::fd_solve(p, opt);

  auto closed_form = [](double x, double y) {
    const double a = 1.25, b = 0.125;
    const double det = a * a - b * b;
    const double q = (a * x * x - 2.0 * b * x * y + a * y * y) / det;
    return std::exp(-0.5 * q) / (2.0 * 3.141592653589793 * std::sqrt(det));
  };
  for (const auto& pt : {std::pair{0.0, 0.0}, {0.5, 0.25}, {-1.0, 0.75}, {1.5, -0.5}}) {
    const double fd = sol.value(std::vector<double>{pt.first, pt.second});
    CHECK(std::abs(fd - closed_form(pt.first, pt.second)) < 5e-4);
  }
}

TEST_CASE("2-D flux form conserves mass including the cross terms") {
  const auto p = make_problem(2, 0.5, {"0.25", "0.125", "0.25"},
                              "exp(-(x1^2+x2^2)/2)/(2*3.141592653589793)");
  reference::FdOptions opt;
  opt.box = {{-6.5, 6.5}, {-6.5, 6.5}};
  opt.nodes = {131, 131};
  opt.time_steps = 250;
  const auto sol = reference::fd_solve(p, opt);
  const double hx = sol.axes[0][1] - sol.axes[0][0];
  const double hy = sol.axes[1][1] - sol.axes[1][0];
  double mass = 0.0;
  for (double v : sol.values) mass += v;
  mass *= hx * hy;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("2-D stability bound is enforced") {
  const auto p = make_problem(2, 0.5, {"0.25", "0.125", "0.25"},
                              "exp(-(x1^2+x2^2)/2)/(2*3.141592653589793)");
  reference::FdOptions opt;
  opt.box = {{-6.5, 6.5}, {-6.5, 6.5}};
  opt.nodes = {131, 131};
  opt.time_steps = 20;  // dt = 0.025 > 0.01
  CHECK_THROWS_AS(reference::fd_solve(p, opt), std::invalid_argument);
}

TEST_CASE("box too small for the initial condition is rejected") {
  const auto p = test::gauss_benchmark();
  reference::FdOptions opt;
  opt.box = {{-3.0, 3.0}};  // phi(3) ~ 4.4e-3 of max, far above 1e-8
  opt.nodes = {301, 0};
  opt.time_steps = 100;
  CHECK_THROWS_AS(reference::fd_solve(p, opt), std::invalid_argument);
}

TEST_CASE("grid interpolation is exact on nodes") {
  const auto p = test::gauss_benchmark();
  reference::FdOptions opt;
  opt.box = {{-8.0, 8.0}};
  opt.nodes = {161, 0};
  opt.time_steps = 50;
  const auto sol = reference::fd_solve(p, opt);
  const double x = sol.axes[0][80];
  CHECK(sol.value(std::span<const double>(&x, 1)) == sol.at_node(80));
}
