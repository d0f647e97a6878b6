#pragma once

#include <array>
#include <string>
#include <vector>

#include "fkmc/problem.hpp"

namespace fkmc::reference {

/// Closed form for constant D and phi = N(0, s) density:
///   f(x, T) = exp(lambda T) * N(0, sqrt(s^2 + 2 D T)) density at x.
double gaussian_oracle(double d_const, double s, double x, double horizon, double lambda_const);

/// Deterministic grid solution at the final time on a truncated box with
/// zero-Dirichlet boundaries.
struct GridSolution {
  int dim = 1;
  std::array<std::vector<double>, 2> axes;
  std::vector<double> values;  // row-major: values[i * ny + j] for d=2
  double final_time = 0.0;
  Box box;
  std::vector<std::string> warnings;

  double at_node(int i, int j = 0) const;
  /// Value at x; exact on nodes, multilinear in between.
  double value(std::span<const double> x) const;
};

struct FdOptions {
  Box box;
  std::array<int, 2> nodes = {0, 0};  // per-axis node counts (>= 3)
  int time_steps = 0;
};

/// Independent discretization of the PDE (flux-form differencing of
/// d/dx^k (D^{kl} d/dx^l f); never calls Problem::drift or
/// Problem::diffusion_factor, so Monte-Carlo agreement is evidence).
///   d=1: Crank-Nicolson, second order in space and time.
///   d=2: explicit scheme with centered cross-term differences; requires
///        dt <= h^2 / (4 max|D|).
/// Preconditions: |phi| < 1e-8 max|phi| on the boundary. A boundary-mass
/// warning is attached if |f| at the boundary exceeds 1e-6 max|f| during
/// the run.
GridSolution fd_solve(const Problem& problem, const FdOptions& opt);

/// |f_h - f_{h/2}| at a probe point: the oracle's own error estimate.
double fd_self_convergence(const Problem& problem, const FdOptions& opt,
                           std::span<const double> probe);

/// (f_h - f_{h/2}) / (f_{h/2} - f_{h/4}) at a probe; ~4 for a second-order
/// scheme.
double fd_richardson_ratio(const Problem& problem, const FdOptions& opt,
                           std::span<const double> probe);

}  // namespace fkmc::reference
