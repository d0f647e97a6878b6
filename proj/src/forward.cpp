#include "fkmc/forward.hpp"

#include <cmath>

#include "fkmc/sde.hpp"
#include "fkmc/util.hpp"
#include "fkmc/worker_pool.hpp"

namespace fkmc::forward {

namespace {

constexpr std::uint64_t kChunk = 16384;

struct ChunkHist {
  std::vector<double> sum_w;
  std::vector<double> sum_w2;
  std::vector<std::uint64_t> count;
  std::uint64_t overflow = 0;
  std::uint64_t faulted = 0;

  explicit ChunkHist(int bins)
      : sum_w(static_cast<std::size_t>(bins), 0.0),
        sum_w2(static_cast<std::size_t>(bins), 0.0),
        count(static_cast<std::size_t>(bins), 0) {}
};

// Fraction of |phi| mass outside the launch interval, integrated on a
// 10^4-point grid over the problem's sample box (or the launch interval
// padded by its own width when no box is declared).
double mass_outside_launch(const Problem& problem, double a0, double b0) {
  double lo, hi;
  if (!problem.sample_box().empty()) {
    lo = problem.sample_box()[0].lo;
    hi = problem.sample_box()[0].hi;
  } else {
    const double w = b0 - a0;
    lo = a0 - w;
    hi = b0 + w;
  }
  const int n = 10000;
  const double h = (hi - lo) / n;
  double total = 0.0, outside = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;  // trapezoid
    const double v = std::abs(problem.initial().eval(std::span<const double>(&x, 1), 0.0));
    total += w * v;
    if (x < a0 || x > b0) outside += w * v;
  }
  return total > 0.0 ? outside / total : 0.0;
}

}  // namespace

BinnedSolution solve_forward(const Problem& problem, const ForwardOptions& opt) {
  if (problem.dimension() != 1)
    throw std::invalid_argument("forward solver is 1-D only");
  if (!problem.reaction_is_zero() || !problem.source_is_zero())
    throw std::invalid_argument("forward solver requires lambda = 0 and S = 0");
  if (!(opt.launch_lo < opt.launch_hi)) throw std::invalid_argument("need launch a0 < b0");
  if (opt.bins < 1) throw std::invalid_argument("need at least one bin");
  if (!(opt.lo < opt.hi)) throw std::invalid_argument("need output a < b");
  if (opt.n_particles < static_cast<std::uint64_t>(opt.bins))
    throw std::invalid_argument("need N >= bins");
  if (!(opt.dt > 0.0) || opt.dt > problem.horizon())
    throw std::invalid_argument("need 0 < dt <= T");

  const int bins = opt.bins;
  const double h = (opt.hi - opt.lo) / bins;
  const std::uint64_t n = opt.n_particles;
  const std::uint64_t n_chunks = (n + kChunk - 1) / kChunk;

  const std::uint64_t launch_key =
      rng::stream_key(opt.seed, rng::kDomainForwardLaunch, rng::point_key({}));
  const std::uint64_t path_key =
      rng::stream_key(opt.seed, rng::kDomainForwardPath, rng::point_key({}));

  std::vector<ChunkHist> hists;
  hists.reserve(n_chunks);
  for (std::uint64_t c = 0; c < n_chunks; ++c) hists.emplace_back(bins);

  parallel_chunks(n, kChunk, opt.workers, [&](std::uint64_t c, std::uint64_t begin, std::uint64_t end) {
    ChunkHist& hist = hists[c];
    for (std::uint64_t i = begin; i < end; ++i) {
      rng::RandomStream launch_stream(launch_key, i);
      const double u = launch_stream.next_uniform();
      const double y0 = opt.launch_lo + u * (opt.launch_hi - opt.launch_lo);
      const double weight = problem.initial().eval(std::span<const double>(&y0, 1), 0.0);

      sde::ParticleState state;
      state.x[0] = y0;
      state.t = 0.0;
      rng::RandomStream path_stream(path_key, i);
      while (state.t < problem.horizon() && !state.faulted) {
        sde::forward_step(state, problem, opt.dt, path_stream);
      }
      if (state.faulted || !std::isfinite(weight) || !std::isfinite(state.x[0])) {
        ++hist.faulted;
        continue;
      }
      const double y = state.x[0];
      int b = static_cast<int>(std::floor((y - opt.lo) / h));
      if (y == opt.hi) b = bins - 1;  // closed right edge of the last bin
      if (b < 0 || b >= bins) {
        ++hist.overflow;
        continue;
      }
      hist.sum_w[static_cast<std::size_t>(b)] += weight;
      hist.sum_w2[static_cast<std::size_t>(b)] += weight * weight;
      ++hist.count[static_cast<std::size_t>(b)];
    }
  });

  // Bin-wise merge in chunk order.
  ChunkHist total(bins);
  for (const ChunkHist& c : hists) {
    for (int b = 0; b < bins; ++b) {
      total.sum_w[static_cast<std::size_t>(b)] += c.sum_w[static_cast<std::size_t>(b)];
      total.sum_w2[static_cast<std::size_t>(b)] += c.sum_w2[static_cast<std::size_t>(b)];
      total.count[static_cast<std::size_t>(b)] += c.count[static_cast<std::size_t>(b)];
    }
    total.overflow += c.overflow;
    total.faulted += c.faulted;
  }

  BinnedSolution out;
  out.lo = opt.lo;
  out.hi = opt.hi;
  out.bins = bins;
  out.bin_width = h;
  out.n_particles = n;
  out.dt = opt.dt;
  out.launch_lo = opt.launch_lo;
  out.launch_hi = opt.launch_hi;
  out.overflow = total.overflow;
  out.n_faulted = total.faulted;
  out.estimate.resize(static_cast<std::size_t>(bins));
  out.se.resize(static_cast<std::size_t>(bins));
  out.count = total.count;

  // estimate = scale * sum(w); the estimator is a mean over all N particles
  // of q_i = w_i * [Y_i in bin], so se = scale * sqrt(N * var(q)).
  const double scale = (opt.launch_hi - opt.launch_lo) / (static_cast<double>(n) * h);
  const double nf = static_cast<double>(n);
  for (int b = 0; b < bins; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    out.estimate[bi] = scale * total.sum_w[bi];
    if (total.count[bi] == 0) {
      out.se[bi] = 0.0;  // empty bin, flagged via count
      continue;
    }
    const double mean_q = total.sum_w[bi] / nf;
    const double var_q = std::max(0.0, (total.sum_w2[bi] - nf * mean_q * mean_q) / (nf - 1.0));
    out.se[bi] = scale * std::sqrt(nf * var_q);
  }

  const double outside = mass_outside_launch(problem, opt.launch_lo, opt.launch_hi);
  if (outside > 1e-6)
    out.warnings.push_back("initial-condition mass outside the launch interval: fraction " +
                           format_double(outside));
  if (total.faulted > 0)
    out.warnings.push_back(std::to_string(total.faulted) + " particle(s) faulted");
  return out;
}

}  // namespace fkmc::forward
