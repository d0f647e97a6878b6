#include <cmath>

#include "doctest.h"
#include "fkmc/sde.hpp"
#include "helpers.hpp"

using namespace fkmc;
using test::make_problem;

TEST_CASE("zero diffusion means a deterministic standstill") {
  const auto p = make_problem(1, 1.0, {"0"}, "1");
  auto s = sde::launch(std::vector<double>{1.25}, 1.0);
  const double zeta = 1.7;
  for (int i = 0; i < 10; ++i) sde::backward_step(s, p, 0.1, std::span<const double>(&zeta, 1));
  CHECK(s.x[0] == 1.25);
  CHECK(s.t == 0.0);
  CHECK_FALSE(s.faulted);
}

TEST_CASE("backward step with forced unit noise") {
  // sigma = sqrt(2*0.5) = 1, dt = 0.01: the noise term is exactly 0.1.
  const auto p = make_problem(1, 1.0, {"0.5"}, "1");
  auto s = sde::launch(std::vector<double>{2.0}, 1.0);
  const double zeta = 1.0;
  sde::backward_step(s, p, 0.01, std::span<const double>(&zeta, 1));
  CHECK(s.x[0] == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(s.t == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("constant reaction integrates exactly by the rectangle rule") {
  const auto p = make_problem(1, 1.0, {"0.5"}, "1", "1");
  auto s = sde::launch(std::vector<double>{0.0}, 1.0);
  const double zeta = 0.3;
  int steps = 0;
  while (s.t > 0.0) {
    sde::backward_step(s, p, 0.1, std::span<const double>(&zeta, 1));
    ++steps;
  }
  CHECK(steps == 10);
  CHECK(s.t == 0.0);
  CHECK(s.reaction_integral == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("source accumulator discounts by the running reaction integral") {
  // lambda = 1, S = 1, two backward steps of 0.5 from t = 1:
  //   Q = e^0 * 0.5 + e^{-0.5} * 0.5.
  const auto p = make_problem(1, 1.0, {"0.5"}, "0", "1", "1");
  auto s = sde::launch(std::vector<double>{0.0}, 1.0);
  const double zeta = 0.0;
  sde::backward_step(s, p, 0.5, std::span<const double>(&zeta, 1));
  sde::backward_step(s, p, 0.5, std::span<const double>(&zeta, 1));
  CHECK(s.t == 0.0);
  CHECK(s.source_sum == doctest::Approx(0.5 + std::exp(-0.5) * 0.5).epsilon(1e-15));
  CHECK(s.reaction_integral == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pure drift forward step") {
  // D = x1 has drift dD/dx = 1 and sigma = sqrt(2 x1) = 0 at the origin.
  const auto p = make_problem(1, 1.0, {"x1"}, "1");
  sde::ParticleState s;
  s.x[0] = 0.0;
  s.t = 0.0;
  const double zeta = 5.0;  // multiplied by sigma = 0
  sde::forward_step(s, p, 0.1, std::span<const double>(&zeta, 1));
  CHECK(s.x[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.t == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("time stepping clips to land exactly on the endpoints") {
  const auto p = make_problem(1, 1.0, {"0.5"}, "1");

  auto b = sde::launch(std::vector<double>{0.0}, 1.0);
  const double zeta = 0.2;
  sde::backward_step(b, p, 0.7, std::span<const double>(&zeta, 1));
  CHECK(b.t == doctest::Approx(0.3));
  sde::backward_step(b, p, 0.7, std::span<const double>(&zeta, 1));
  CHECK(b.t == 0.0);  // exactly

  sde::ParticleState f;
  f.t = 0.0;
  sde::forward_step(f, p, 0.7, std::span<const double>(&zeta, 1));
  sde::forward_step(f, p, 0.7, std::span<const double>(&zeta, 1));
  CHECK(f.t == 1.0);  // exactly, clipped
  // A further step is a no-op.
  const double x_before = f.x[0];
  sde::forward_step(f, p, 0.7, std::span<const double>(&zeta, 1));
  CHECK(f.t == 1.0);
  CHECK(f.x[0] == x_before);
}

TEST_CASE("backward and forward traverse identical trajectories for constant coefficients") {
  // Constant D: mu = 0, sigma constant. Replaying the backward noise
  // reversed and sign-flipped drives the forward difference equation back
  // along the same path to the launch point.
  const auto p = make_problem(1, 1.0, {"0.37"}, "1");
  const double dt = 0.1;
  const double x_launch = 1.234;

  rng::RandomStream stream(rng::stream_key(11, rng::kDomainBackward, 5), 0);
  std::vector<double> zetas;
  auto s = sde::launch(std::vector<double>{x_launch}, 1.0);
  while (s.t > 0.0) {
    zetas.push_back(stream.next_normal());
    sde::backward_step(s, p, dt, std::span<const double>(&zetas.back(), 1));
  }
  REQUIRE_FALSE(s.faulted);

  sde::ParticleState f;
  f.x[0] = s.x[0];
  f.t = 0.0;
  for (std::size_t i = zetas.size(); i-- > 0;) {
    const double flipped = -zetas[i];
    sde::forward_step(f, p, dt, std::span<const double>(&flipped, 1));
  }
  CHECK(f.t == 1.0);
  CHECK(f.x[0] == doctest::Approx(x_launch).epsilon(1e-12));
}

TEST_CASE("faults freeze the state") {
  // drift of D = 1/x1 blows up at the origin.
  const auto p = make_problem(1, 1.0, {"1/x1"}, "1");
  auto s = sde::launch(std::vector<double>{0.0}, 1.0);
  const double zeta = 0.0;
  sde::backward_step(s, p, 0.1, std::span<const double>(&zeta, 1));
  CHECK(s.faulted);
  const double t_after = s.t;
  sde::backward_step(s, p, 0.1, std::span<const double>(&zeta, 1));
  CHECK(s.t == t_after);  // no further motion
}

TEST_CASE("a full trajectory is a pure function of seed, stream and parameters") {
  const auto p = test::tanh_benchmark();
  auto run = [&](std::uint64_t seed, std::uint64_t particle) {
    rng::RandomStream stream(rng::stream_key(seed, rng::kDomainBackward, 17), particle);
    auto s = sde::launch(std::vector<double>{0.4}, 1.0);
    while (s.t > 0.0 && !s.faulted) sde::backward_step(s, p, 0.05, stream);
    return s;
  };
  const auto a = run(5, 3);
  const auto b = run(5, 3);
  CHECK(a.x[0] == b.x[0]);
  CHECK(a.reaction_integral == b.reaction_integral);
  const auto c = run(6, 3);
  CHECK(a.x[0] != c.x[0]);
}
