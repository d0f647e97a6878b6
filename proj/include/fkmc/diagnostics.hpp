#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fkmc/forward.hpp"
#include "fkmc/problem.hpp"

namespace fkmc::diagnostics {

/// One checked quantity: every row carries its own explicit tolerance;
/// the report verdict is the conjunction of the rows.
struct Row {
  std::string parameter;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct ConvergenceReport {
  std::string study;  // "quadratic-variation" | "N-scaling" | "dt-scaling" | "oracle-comparison"
  std::vector<Row> rows;
  std::vector<std::string> warnings;
  // Optional side table (bin-by-bin comparison for oracle-comparison).
  std::vector<std::string> table_columns;
  std::vector<std::vector<double>> table;

  bool verdict() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }

  Row& add(std::string parameter, double measured, double expected, double tolerance,
           std::string note = "") {
    rows.push_back(Row{std::move(parameter), measured, expected, tolerance,
                       std::abs(measured - expected) <= tolerance, std::move(note)});
    return rows.back();
  }
};

/// Draws M realizations of S_n = sum of (Delta W)^2 over [0, tau] and checks
/// the Wiener quadratic-variation identities: E[S_n] = tau (tolerance
/// 3 sqrt(2 tau^2 / n / M)) and V[S_n] = 2 tau^2 / n (tolerance 10%).
ConvergenceReport quadratic_variation_experiment(double tau, int n, int m_realizations,
                                                 std::uint64_t seed, int workers = 1);

/// Empirical std of the point estimate over m_seeds independent master seeds
/// at each N; fits log(std) against log(N) (expected slope -1/2) and checks
/// that quadrupling N halves the std within 20%. Also cross-checks the
/// solver's reported se against the empirical std at the largest N.
ConvergenceReport n_scaling_study(const Problem& problem, std::span<const double> x, double dt,
                                  std::span<const std::uint64_t> n_list, int m_seeds,
                                  std::uint64_t seed, int workers = 1);

/// bias(dt) = |f-hat(dt) - oracle|; checks bias ratio in [1.5, 2.6] per
/// halving. dt_list must halve at each step. Warns (without failing) when
/// se > bias/3 anywhere; reports degenerate-pass when the bias is below
/// 3 se at every dt (unbiased-within-noise, e.g. constant coefficients).
ConvergenceReport dt_scaling_study(const Problem& problem, std::span<const double> x,
                                   std::uint64_t n_particles, std::span<const double> dt_list,
                                   double oracle_value, std::uint64_t seed, int workers = 1);

/// Forward histogram vs backward point estimates at the bin centers, with
/// the combined tolerance 3 sqrt(se_fwd^2 + se_bwd^2) + C h^2, C from the
/// oracle's curvature when an oracle callback is given. For bins == 1 the
/// backward side is the average over 32 in-bin quadrature points (both
/// sides then estimate the same integral mean). Edge bins are reported but
/// excluded from the verdict.
ConvergenceReport compare_methods(const Problem& problem, const forward::ForwardOptions& fwd_opt,
                                  std::uint64_t n_backward,
                                  const std::function<double(double)>& oracle = {});

}  // namespace fkmc::diagnostics
