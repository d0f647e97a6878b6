#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fkmc/problem.hpp"

namespace fkmc::backward {

/// Solution value at one query point with its statistical error.
/// se is the sample standard deviation of the per-particle contributions
/// over sqrt(N_effective), N_effective = N - faulted (unbiased variance,
/// divisor N_effective - 1).
struct PointEstimate {
  std::vector<double> x;
  double horizon = 0.0;
  double value = 0.0;       // f-hat
  double se = 0.0;
  std::uint64_t n_particles = 0;
  double dt = 0.0;
  std::uint64_t n_faulted = 0;
  bool failed = false;        // every particle faulted (or fewer than 2 left)
  bool fault_warning = false; // more than 1% of particles faulted

  std::uint64_t n_effective() const { return n_particles - n_faulted; }
};

/// Cached backward-trajectory endpoints for one query point: enough to
/// re-evaluate the estimate under any initial condition without
/// re-simulation. Replaying the solver with the same (seed, spec, x, T,
/// dt, N) reproduces the set bit-identically.
struct EndpointSet {
  struct Record {
    std::uint64_t particle = 0;       // original particle index (chunk-exact replay)
    std::array<double, kMaxDim> x0{}; // X_i(t=0)
    double weight = 0.0;              // exp(J_i), J_i = K_i at t = 0
    double source_sum = 0.0;          // Q_i
  };

  int dimension = 0;
  std::vector<double> x;
  double horizon = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t n_particles = 0;
  std::uint64_t n_faulted = 0;
  std::vector<Record> records;  // non-faulted particles, in particle order
};

struct SolveOptions {
  std::uint64_t n_particles = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Feynman-Kac point estimate: launch N particles at x, trace them to t=0,
/// average exp(J_i) * (phi(X_i(0)) + Q_i). Faulted particles are excluded
/// and counted, never zero-substituted. The reduction is chunked and merged
/// in particle-index order (compensated summation), so results are
/// independent of the worker count.
PointEstimate solve_point(const Problem& problem, std::span<const double> x,
                          const SolveOptions& opt);

/// Batch version; per-point particle counts optional. Per-point errors are
/// recorded in the estimates, never abort the batch.
std::vector<PointEstimate> solve_grid(const Problem& problem,
                                      std::span<const std::vector<double>> points,
                                      const SolveOptions& opt,
                                      std::span<const std::uint64_t> per_point_n = {});

EndpointSet trace_endpoints(const Problem& problem, std::span<const double> x,
                            const SolveOptions& opt);

/// f-hat = mean over records of weight * (phi_m(X0) + Q). Bit-identical to
/// solve_point when phi_m is the problem's own initial condition. A record
/// whose contribution is non-finite counts as faulted for this evaluation.
PointEstimate evaluate_with_endpoints(const EndpointSet& endpoints,
                                      const expr::Expression& phi_m, int workers = 1);

}  // namespace fkmc::backward
