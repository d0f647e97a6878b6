#include "fkmc/backward.hpp"

#include <cmath>
#include <limits>

#include "fkmc/sde.hpp"
#include "fkmc/util.hpp"
#include "fkmc/worker_pool.hpp"

namespace fkmc::backward {

namespace {

constexpr std::uint64_t kChunk = 4096;  // fixed: chunk layout must not depend on workers

struct ChunkStats {
  KahanSum sum;
  KahanSum sum_sq;
  std::uint64_t count = 0;
  std::uint64_t faults = 0;
  double first = 0.0;
  bool any = false;
  bool all_equal = true;

  void add(double contribution) {
    sum.add(contribution);
    sum_sq.add(contribution * contribution);
    if (!any) {
      first = contribution;
      any = true;
    } else if (contribution != first) {
      all_equal = false;
    }
    ++count;
  }
};

// Merges chunk partials in index order and finishes mean/se. When every
// contribution is bit-identical the mean is that value exactly and se is 0,
// which keeps the zero-variance identities sharp.
void finish_estimate(PointEstimate& est, std::span<const ChunkStats> chunks, std::uint64_t n,
                     std::uint64_t base_faults) {
  KahanSum sum, sum_sq;
  std::uint64_t count = 0, faults = base_faults;
  double first = 0.0;
  bool any = false, all_equal = true;
  for (const ChunkStats& c : chunks) {
    sum.merge(c.sum);
    sum_sq.merge(c.sum_sq);
    count += c.count;
    faults += c.faults;
    if (c.any) {
      if (!any) {
        first = c.first;
        any = true;
      } else if (c.first != first) {
        all_equal = false;
      }
      if (!c.all_equal) all_equal = false;
    }
  }

  est.n_particles = n;
  est.n_faulted = faults;
  if (count < 2) {
    est.failed = true;
    est.value = std::numeric_limits<double>::quiet_NaN();
    est.se = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  est.fault_warning = faults * 100 > n;
  if (all_equal) {
    est.value = first;
    est.se = 0.0;
    return;
  }
  const double nf = static_cast<double>(count);
  const double total = sum.value();
  est.value = total / nf;
  const double var = std::max(0.0, (sum_sq.value() - total * total / nf) / (nf - 1.0));
  est.se = std::sqrt(var / nf);
}

inline double contribution_of(double weight, double phi_value, double source_sum) {
  return weight * (phi_value + source_sum);
}

// Traces particle i of the (seed, point) ensemble to t = 0.
inline sde::ParticleState trace_particle(const Problem& problem, std::span<const double> x,
                                         double dt, std::uint64_t key, std::uint64_t i) {
  rng::RandomStream stream(key, i);
  sde::ParticleState state = sde::launch(x, problem.horizon());
  while (state.t > 0.0 && !state.faulted) {
    sde::backward_step(state, problem, dt, stream);
  }
  return state;
}

void check_options(const Problem& problem, const SolveOptions& opt) {
  if (opt.n_particles < 2) throw std::invalid_argument("need N >= 2");
  if (!(opt.dt > 0.0) || opt.dt > problem.horizon())
    throw std::invalid_argument("need 0 < dt <= T");
}

// Shared trajectory-and-contribution chunk body.
void run_chunk(const Problem& problem, std::span<const double> x, double dt, std::uint64_t key,
               std::uint64_t begin, std::uint64_t end, ChunkStats& stats) {
  const auto& phi = problem.initial();
  for (std::uint64_t i = begin; i < end; ++i) {
    const sde::ParticleState state = trace_particle(problem, x, dt, key, i);
    if (state.faulted) {
      ++stats.faults;
      continue;
    }
    const std::span<const double> x0(state.x.data(), x.size());
    const double contribution = contribution_of(std::exp(state.reaction_integral),
                                                phi.eval(x0, 0.0), state.source_sum);
    if (!std::isfinite(contribution)) {
      ++stats.faults;
      continue;
    }
    stats.add(contribution);
  }
}

}  // namespace

PointEstimate solve_point(const Problem& problem, std::span<const double> x,
                          const SolveOptions& opt) {
  check_options(problem, opt);
  if (x.size() != static_cast<std::size_t>(problem.dimension()))
    throw std::invalid_argument("query point has wrong dimension");

  const std::uint64_t key = rng::stream_key(opt.seed, rng::kDomainBackward, rng::point_key(x));
  const std::uint64_t n = opt.n_particles;
  std::vector<ChunkStats> chunks((n + kChunk - 1) / kChunk);

  parallel_chunks(n, kChunk, opt.workers, [&](std::uint64_t c, std::uint64_t begin, std::uint64_t end) {
    run_chunk(problem, x, opt.dt, key, begin, end, chunks[c]);
  });

  PointEstimate est;
  est.x.assign(x.begin(), x.end());
  est.horizon = problem.horizon();
  est.dt = opt.dt;
  finish_estimate(est, chunks, n, 0);
  return est;
}

std::vector<PointEstimate> solve_grid(const Problem& problem,
                                      std::span<const std::vector<double>> points,
                                      const SolveOptions& opt,
                                      std::span<const std::uint64_t> per_point_n) {
  if (points.empty()) throw std::invalid_argument("solve_grid needs at least one point");
  if (!per_point_n.empty() && per_point_n.size() != points.size())
    throw std::invalid_argument("per-point N list must match the point list");
  if (!(opt.dt > 0.0) || opt.dt > problem.horizon())
    throw std::invalid_argument("need 0 < dt <= T");

  // Flatten (point, chunk) tasks so small points still parallelize; the
  // task layout is a function of the point list alone, not of workers.
  struct Task {
    std::size_t point;
    std::uint64_t chunk;
  };
  std::vector<Task> tasks;
  std::vector<std::vector<ChunkStats>> stats(points.size());
  std::vector<std::uint64_t> n_of(points.size());
  std::vector<std::uint64_t> key_of(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != static_cast<std::size_t>(problem.dimension()))
      throw std::invalid_argument("query point has wrong dimension");
    n_of[j] = per_point_n.empty() ? opt.n_particles : per_point_n[j];
    if (n_of[j] < 2) throw std::invalid_argument("each per-point N must be >= 2");
    key_of[j] = rng::stream_key(opt.seed, rng::kDomainBackward, rng::point_key(points[j]));
    const std::uint64_t n_chunks = (n_of[j] + kChunk - 1) / kChunk;
    stats[j].resize(n_chunks);
    for (std::uint64_t c = 0; c < n_chunks; ++c) tasks.push_back({j, c});
  }

  parallel_chunks(tasks.size(), 1, opt.workers, [&](std::uint64_t ti, std::uint64_t, std::uint64_t) {
    const Task task = tasks[ti];
    const std::uint64_t begin = task.chunk * kChunk;
    const std::uint64_t end = std::min(begin + kChunk, n_of[task.point]);
    run_chunk(problem, points[task.point], opt.dt, key_of[task.point], begin, end,
              stats[task.point][task.chunk]);
  });

  std::vector<PointEstimate> out;
  out.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    PointEstimate est;
    est.x = points[j];
    est.horizon = problem.horizon();
    est.dt = opt.dt;
    finish_estimate(est, stats[j], n_of[j], 0);
    out.push_back(std::move(est));
  }
  return out;
}

EndpointSet trace_endpoints(const Problem& problem, std::span<const double> x,
                            const SolveOptions& opt) {
  check_options(problem, opt);
  if (x.size() != static_cast<std::size_t>(problem.dimension()))
    throw std::invalid_argument("query point has wrong dimension");

  const std::uint64_t key = rng::stream_key(opt.seed, rng::kDomainBackward, rng::point_key(x));
  const std::uint64_t n = opt.n_particles;

  // One slot per particle; compacted afterwards so records keep particle order.
  std::vector<EndpointSet::Record> slots(n);
  std::vector<std::uint8_t> ok(n, 0);
  parallel_chunks(n, kChunk, opt.workers, [&](std::uint64_t, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const sde::ParticleState state = trace_particle(problem, x, opt.dt, key, i);
      if (state.faulted) continue;
      EndpointSet::Record& r = slots[i];
      r.particle = i;
      r.x0 = state.x;
      r.weight = std::exp(state.reaction_integral);
      r.source_sum = state.source_sum;
      ok[i] = 1;
    }
  });

  EndpointSet set;
  set.dimension = problem.dimension();
  set.x.assign(x.begin(), x.end());
  set.horizon = problem.horizon();
  set.dt = opt.dt;
  set.seed = opt.seed;
  set.n_particles = n;
  set.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (ok[i]) set.records.push_back(slots[i]);
  }
  set.n_faulted = n - set.records.size();
  return set;
}

PointEstimate evaluate_with_endpoints(const EndpointSet& endpoints,
                                      const expr::Expression& phi_m, int workers) {
  if (endpoints.n_particles == 0) throw std::invalid_argument("empty endpoint set");
  const std::uint64_t n = endpoints.n_particles;
  const std::uint64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<ChunkStats> chunks(n_chunks);

  // Records are chunked by their original particle index, so the partial
  // sums (and hence the output bytes) match solve_point even with faults.
  std::vector<std::size_t> chunk_begin(n_chunks + 1, endpoints.records.size());
  {
    std::size_t r = 0;
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
      chunk_begin[c] = r;
      while (r < endpoints.records.size() && endpoints.records[r].particle < (c + 1) * kChunk) ++r;
    }
    chunk_begin[n_chunks] = endpoints.records.size();
  }

  const std::size_t d = static_cast<std::size_t>(endpoints.dimension);
  parallel_chunks(n_chunks, 1, workers, [&](std::uint64_t c, std::uint64_t, std::uint64_t) {
    ChunkStats& stats = chunks[c];
    for (std::size_t r = chunk_begin[c]; r < chunk_begin[c + 1]; ++r) {
      const auto& rec = endpoints.records[r];
      const std::span<const double> x0(rec.x0.data(), d);
      const double contribution =
          contribution_of(rec.weight, phi_m.eval(x0, 0.0), rec.source_sum);
      if (!std::isfinite(contribution)) {
        ++stats.faults;
        continue;
      }
      stats.add(contribution);
    }
  });

  PointEstimate est;
  est.x = endpoints.x;
  est.horizon = endpoints.horizon;
  est.dt = endpoints.dt;
  finish_estimate(est, chunks, n, endpoints.n_faulted);
  return est;
}

}  // namespace fkmc::backward
