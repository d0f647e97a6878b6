#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fkmc/problem.hpp"

namespace fkmc::forward {

/// Histogram estimate of f(y, T) from forward trajectories launched
/// uniformly on [launch_lo, launch_hi] with weights phi(Y_i(0)).
struct BinnedSolution {
  double lo = 0.0, hi = 0.0;        // output interval [a, b]
  int bins = 0;
  double bin_width = 0.0;
  std::vector<double> estimate;     // per bin
  std::vector<double> se;           // per bin
  std::vector<std::uint64_t> count; // landers per bin
  std::uint64_t overflow = 0;       // particles outside [a, b], tallied not dropped
  std::uint64_t n_faulted = 0;
  std::uint64_t n_particles = 0;
  double dt = 0.0;
  double launch_lo = 0.0, launch_hi = 0.0;
  std::vector<std::string> warnings;

  double center(int b) const { return lo + (b + 0.5) * bin_width; }
  bool empty_bin(int b) const { return count[static_cast<std::size_t>(b)] == 0; }
};

struct ForwardOptions {
  double launch_lo = 0.0, launch_hi = 0.0;
  double lo = 0.0, hi = 0.0;
  int bins = 0;
  std::uint64_t n_particles = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Conventional forward Monte-Carlo comparison solver. Restricted by design
/// to d=1 with lambda = 0 and S = 0. The uniform launch density is inverted,
///   estimate(bin) = (b0-a0)/(N h) * sum of phi(Y_i(0)) over landers,
/// so the histogram targets f itself. Per-chunk histograms are merged
/// bin-wise in chunk order; output is worker-count independent.
BinnedSolution solve_forward(const Problem& problem, const ForwardOptions& opt);

}  // namespace fkmc::forward
