#include "fkmc/diagnostics.hpp"

#include <cmath>

#include "fkmc/backward.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/util.hpp"
#include "fkmc/worker_pool.hpp"

namespace fkmc::diagnostics {

namespace {

// Mean and unbiased sample variance in a fixed order.
std::pair<double, double> mean_and_variance(std::span<const double> v) {
  KahanSum sum;
  for (double x : v) sum.add(x);
  const double mean = sum.value() / static_cast<double>(v.size());
  KahanSum dev;
  for (double x : v) dev.add((x - mean) * (x - mean));
  const double var = dev.value() / static_cast<double>(v.size() - 1);
  return {mean, var};
}

// Windowed pass: [lo, hi] expressed as (center, halfwidth) for the row.
Row& add_window(ConvergenceReport& rep, std::string parameter, double measured, double lo,
                double hi, std::string note = "") {
  return rep.add(std::move(parameter), measured, 0.5 * (lo + hi), 0.5 * (hi - lo),
                 std::move(note));
}

}  // namespace

ConvergenceReport quadratic_variation_experiment(double tau, int n, int m_realizations,
                                                 std::uint64_t seed, int workers) {
  if (n < 10) throw std::invalid_argument("need n >= 10 subdivisions");
  if (m_realizations < 100) throw std::invalid_argument("need M >= 100 realizations");
  if (!(tau > 0.0)) throw std::invalid_argument("need tau > 0");

  const double dtau = tau / n;
  const std::uint64_t key = rng::stream_key(seed, rng::kDomainWiener, 0);
  std::vector<double> s(static_cast<std::size_t>(m_realizations));
  parallel_chunks(static_cast<std::uint64_t>(m_realizations), 256, workers,
                  [&](std::uint64_t, std::uint64_t begin, std::uint64_t end) {
                    for (std::uint64_t m = begin; m < end; ++m) {
                      rng::RandomStream stream(key, m);
                      double acc = 0.0;
                      for (int j = 0; j < n; ++j) {
                        const double dw = stream.next_normal() * std::sqrt(dtau);
                        acc += dw * dw;
                      }
                      s[m] = acc;
                    }
                  });

  const auto [mean, var] = mean_and_variance(s);
  const double expected_var = 2.0 * tau * tau / n;

  ConvergenceReport rep;
  rep.study = "quadratic-variation";
  rep.add("mean S_n", mean, tau, 3.0 * std::sqrt(expected_var / m_realizations),
          "E[S_n] = tau");
  rep.add("variance S_n", var, expected_var, 0.1 * expected_var, "V[S_n] = 2 tau^2 / n");
  return rep;
}

ConvergenceReport n_scaling_study(const Problem& problem, std::span<const double> x, double dt,
                                  std::span<const std::uint64_t> n_list, int m_seeds,
                                  std::uint64_t seed, int workers) {
  if (n_list.size() < 2) throw std::invalid_argument("need at least two N values");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("N list must be strictly increasing");
  if (m_seeds < 2) throw std::invalid_argument("need at least two seeds");

  ConvergenceReport rep;
  rep.study = "N-scaling";

  std::vector<double> stds;
  double se_mean_largest = 0.0;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    std::vector<double> estimates(static_cast<std::size_t>(m_seeds));
    KahanSum se_sum;
    // Member seeds are spaced from a mixed base so studies with different
    // master seeds share no members.
    const std::uint64_t base = splitmix64(seed);
    for (int m = 0; m < m_seeds; ++m) {
      backward::SolveOptions opt;
      opt.n_particles = n_list[k];
      opt.dt = dt;
      opt.seed = base + static_cast<std::uint64_t>(m);
      opt.workers = workers;
      const auto est = backward::solve_point(problem, x, opt);
      if (est.failed) throw std::runtime_error("point estimate failed during N-scaling study");
      estimates[static_cast<std::size_t>(m)] = est.value;
      se_sum.add(est.se);
    }
    const auto [mean, var] = mean_and_variance(estimates);
    (void)mean;
    stds.push_back(std::sqrt(var));
    if (k + 1 == n_list.size()) se_mean_largest = se_sum.value() / m_seeds;
  }

  bool degenerate = true;
  for (double s : stds)
    if (s != 0.0) degenerate = false;
  if (degenerate) {
    rep.add("empirical std", 0.0, 0.0, 0.0,
            "degenerate-pass: deterministic trajectories, zero spread at every N");
    return rep;
  }

  // Least-squares slope of log std against log N.
  const std::size_t k = n_list.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lx = std::log(static_cast<double>(n_list[i]));
    const double ly = std::log(stds[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  rep.add("fitted slope of log(std) vs log(N)", slope, -0.5, 0.1);

  // Quadrupling N should halve the std (within 20%), measured per adjacent
  // pair and expressed as the equivalent four-fold ratio.
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const double ratio = stds[i + 1] / stds[i];
    const double b = std::log(ratio) / std::log(static_cast<double>(n_list[i + 1]) /
                                                static_cast<double>(n_list[i]));
    const double r4 = std::pow(4.0, b);
    rep.add("std(4N)/std(N) from N=" + std::to_string(n_list[i]) +
                "->" + std::to_string(n_list[i + 1]),
            r4, 0.5, 0.1);
  }

  // The solver's se estimator is validated against the empirical spread.
  add_window(rep, "reported se / empirical std at N=" + std::to_string(n_list.back()),
             se_mean_largest / stds.back(), 0.7, 1.4, "cross-check of the se estimator");
  return rep;
}

ConvergenceReport dt_scaling_study(const Problem& problem, std::span<const double> x,
                                   std::uint64_t n_particles, std::span<const double> dt_list,
                                   double oracle_value, std::uint64_t seed, int workers) {
  if (dt_list.size() < 2) throw std::invalid_argument("need at least two dt values");
  for (std::size_t i = 0; i + 1 < dt_list.size(); ++i) {
    if (std::abs(dt_list[i] / dt_list[i + 1] - 2.0) > 1e-12)
      throw std::invalid_argument("dt list must halve at each step");
  }

  ConvergenceReport rep;
  rep.study = "dt-scaling";
  rep.table_columns = {"dt", "estimate", "se", "bias"};

  std::vector<double> bias(dt_list.size()), se(dt_list.size());
  for (std::size_t i = 0; i < dt_list.size(); ++i) {
    backward::SolveOptions opt;
    opt.n_particles = n_particles;
    opt.dt = dt_list[i];
    opt.seed = seed;
    opt.workers = workers;
    const auto est = backward::solve_point(problem, x, opt);
    if (est.failed) throw std::runtime_error("point estimate failed during dt-scaling study");
    bias[i] = std::abs(est.value - oracle_value);
    se[i] = est.se;
    rep.table.push_back({dt_list[i], est.value, est.se, bias[i]});
    if (se[i] > bias[i] / 3.0)
      rep.warnings.push_back("se exceeds bias/3 at dt=" + format_double(dt_list[i]) +
                             " (statistical noise contaminates the bias measurement)");
  }

  bool degenerate = true;
  for (std::size_t i = 0; i < dt_list.size(); ++i)
    if (bias[i] > 3.0 * se[i]) degenerate = false;
  if (degenerate) {
    rep.warnings.clear();
    for (std::size_t i = 0; i < dt_list.size(); ++i)
      rep.add("bias at dt=" + format_double(dt_list[i]), bias[i], 0.0, 3.0 * se[i],
              "degenerate-pass: unbiased within noise");
    return rep;
  }

  for (std::size_t i = 0; i + 1 < dt_list.size(); ++i) {
    add_window(rep,
               "bias(" + format_double(dt_list[i]) + ")/bias(" + format_double(dt_list[i + 1]) +
                   ")",
               bias[i] / bias[i + 1], 1.5, 2.6, "expected ~2 per halving");
  }
  return rep;
}

ConvergenceReport compare_methods(const Problem& problem, const forward::ForwardOptions& fwd_opt,
                                  std::uint64_t n_backward,
                                  const std::function<double(double)>& oracle) {
  ConvergenceReport rep;
  rep.study = "oracle-comparison";

  const forward::BinnedSolution fwd = forward::solve_forward(problem, fwd_opt);
  for (const auto& w : fwd.warnings) rep.warnings.push_back(w);

  backward::SolveOptions bopt;
  bopt.n_particles = n_backward;
  bopt.dt = fwd_opt.dt;
  bopt.seed = fwd_opt.seed;
  bopt.workers = fwd_opt.workers;

  if (fwd.bins == 1) {
    // Both sides estimate the mean of f over the single wide bin; the
    // backward side averages 32 in-bin quadrature points.
    constexpr int kQuad = 32;
    const double sub = fwd.bin_width / kQuad;
    std::vector<std::vector<double>> points;
    for (int q = 0; q < kQuad; ++q) points.push_back({fwd.lo + (q + 0.5) * sub});
    const auto ests = backward::solve_grid(problem, points, bopt);
    KahanSum sum, sum_se2;
    for (const auto& e : ests) {
      if (e.failed) throw std::runtime_error("backward estimate failed in compare_methods");
      sum.add(e.value);
      sum_se2.add(e.se * e.se);
    }
    const double bwd_avg = sum.value() / kQuad;
    const double se_avg = std::sqrt(sum_se2.value()) / kQuad;
    const double band = 3.0 * std::sqrt(fwd.se[0] * fwd.se[0] + se_avg * se_avg);
    rep.add("|forward - backward| over single bin", std::abs(fwd.estimate[0] - bwd_avg), 0.0,
            band, "integral-mean comparison");
    rep.table_columns = {"bin_center", "forward", "forward_se", "backward", "backward_se"};
    rep.table.push_back({fwd.center(0), fwd.estimate[0], fwd.se[0], bwd_avg, se_avg});
    return rep;
  }

  std::vector<std::vector<double>> centers;
  for (int b = 0; b < fwd.bins; ++b) centers.push_back({fwd.center(b)});
  const auto ests = backward::solve_grid(problem, centers, bopt);

  // Binning-bias constant from the oracle's curvature: the bin average of f
  // differs from the center value by h^2 f''/24 + O(h^4).
  double curvature = 0.0;
  if (oracle) {
    const double h = fwd.bin_width;
    for (int b = 0; b < fwd.bins; ++b) {
      const double y = fwd.center(b);
      const double f2 = (oracle(y + h) - 2.0 * oracle(y) + oracle(y - h)) / (h * h);
      curvature = std::max(curvature, std::abs(f2));
    }
  }
  const double bias_term = curvature / 24.0 * fwd.bin_width * fwd.bin_width;

  rep.table_columns = {"bin_center", "forward", "forward_se", "backward", "backward_se",
                       "oracle"};
  for (int b = 0; b < fwd.bins; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    const auto& bwd = ests[bi];
    if (bwd.failed) throw std::runtime_error("backward estimate failed in compare_methods");
    const double y = fwd.center(b);
    const double diff = std::abs(fwd.estimate[bi] - bwd.value);
    const double band =
        3.0 * std::sqrt(fwd.se[bi] * fwd.se[bi] + bwd.se * bwd.se) + bias_term;
    const bool edge = (b == 0 || b == fwd.bins - 1);
    Row& row = rep.add("bin " + std::to_string(b) + " (y=" + format_double(y) + ")", diff, 0.0,
                       band, edge ? "edge bin (excluded from verdict)" : "");
    if (edge) row.pass = true;
    rep.table.push_back({y, fwd.estimate[bi], fwd.se[bi], bwd.value, bwd.se,
                         oracle ? oracle(y) : std::numeric_limits<double>::quiet_NaN()});
  }
  return rep;
}

}  // namespace fkmc::diagnostics
