// fkmc: pointwise Monte-Carlo solution of linear parabolic PDEs by backward
// particle tracing, with a forward comparison solver, deterministic
// reference solvers, and convergence diagnostics.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fkmc/backward.hpp"
#include "fkmc/diagnostics.hpp"
#include "fkmc/endpoint_cache.hpp"
#include "fkmc/forward.hpp"
#include "fkmc/reference.hpp"
#include "fkmc/report_io.hpp"
#include "fkmc/specfile.hpp"
#include "fkmc/util.hpp"

namespace {

using namespace fkmc;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw ConfigError("cannot parse " + what + ": '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// "x1,x2;y1,y2;..." -> list of d-dimensional points.
std::vector<std::vector<double>> parse_points(const std::string& text, int dimension) {
  std::vector<std::vector<double>> points;
  for (const std::string& p : split(text, ';')) {
    if (p.empty()) continue;
    std::vector<double> x;
    for (const std::string& c : split(p, ',')) x.push_back(parse_real(c, "point coordinate"));
    if (x.size() != static_cast<std::size_t>(dimension))
      throw ConfigError("point '" + p + "' has " + std::to_string(x.size()) +
                        " coordinates, expected " + std::to_string(dimension));
    points.push_back(std::move(x));
  }
  if (points.empty()) throw ConfigError("no query points given");
  return points;
}

// "min:max:count[,min:max:count...]" -> tensor grid, row-major (first axis
// slowest).
std::vector<std::vector<double>> parse_grid(const std::string& text, int dimension) {
  struct Axis {
    double lo, hi;
    std::uint64_t count;
  };
  std::vector<Axis> axes;
  for (const std::string& a : split(text, ',')) {
    const auto parts = split(a, ':');
    if (parts.size() != 3) throw ConfigError("grid axis '" + a + "' is not min:max:count");
    Axis axis{parse_real(parts[0], "grid min"), parse_real(parts[1], "grid max"),
              static_cast<std::uint64_t>(parse_real(parts[2], "grid count"))};
    if (axis.count < 1) throw ConfigError("grid count must be >= 1");
    if (axis.count > 1 && !(axis.lo < axis.hi)) throw ConfigError("grid needs min < max");
    axes.push_back(axis);
  }
  if (axes.size() != static_cast<std::size_t>(dimension))
    throw ConfigError("grid has " + std::to_string(axes.size()) + " axes, expected " +
                      std::to_string(dimension));
  std::uint64_t total = 1;
  for (const Axis& a : axes) {
    total *= a.count;
    if (total > 10'000'000ULL) throw ConfigError("grid expands to more than 10^7 points");
  }
  std::vector<std::vector<double>> points(total, std::vector<double>(axes.size()));
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t rem = idx;
    for (std::size_t k = axes.size(); k-- > 0;) {
      const Axis& a = axes[k];
      const std::uint64_t i = rem % a.count;
      rem /= a.count;
      points[idx][k] = a.count == 1 ? a.lo : a.lo + (a.hi - a.lo) * static_cast<double>(i) /
                                                       static_cast<double>(a.count - 1);
    }
  }
  return points;
}

std::vector<std::uint64_t> parse_n_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const std::string& c : split(text, ',')) {
    const double v = parse_real(c, "particle count");
    if (v < 2 || v != std::floor(v)) throw ConfigError("N must be an integer >= 2: '" + c + "'");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("empty N list");
  return out;
}

std::pair<double, double> parse_interval(const std::string& text, const std::string& what) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError(what + " must be lo:hi");
  const double lo = parse_real(parts[0], what);
  const double hi = parse_real(parts[1], what);
  if (!(lo < hi)) throw ConfigError(what + " needs lo < hi");
  return {lo, hi};
}

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("FKMC_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

void emit(const std::string& out_path, const std::string& bytes) {
  if (out_path == "-") {
    std::cout << bytes;
  } else {
    io::write_file(out_path, bytes);
  }
}

// Shared per-subcommand state wired into CLI11.
struct CommonOpts {
  std::string spec_path;
  std::string points_text;
  std::string grid_text;
  std::string n_text = "0";
  double dt = 0.0;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_path = "-";
  std::string format = "csv";
};

std::vector<std::vector<double>> query_points(const CommonOpts& o, int dimension) {
  if (!o.points_text.empty() && !o.grid_text.empty())
    throw ConfigError("give either --points or --grid, not both");
  if (!o.points_text.empty()) return parse_points(o.points_text, dimension);
  if (!o.grid_text.empty()) return parse_grid(o.grid_text, dimension);
  throw ConfigError("need --points or --grid");
}

int run_solve(const CommonOpts& o) {
  const Problem problem = specfile::load_spec(o.spec_path);
  const auto points = query_points(o, problem.dimension());
  const auto n_list = parse_n_list(o.n_text);
  if (n_list.size() != 1 && n_list.size() != points.size())
    throw ConfigError("--n must be a scalar or one value per point");

  backward::SolveOptions opt;
  opt.n_particles = n_list[0];
  opt.dt = o.dt;
  opt.seed = o.seed;
  opt.workers = resolve_workers(o.workers);

  std::vector<backward::PointEstimate> estimates;
  if (n_list.size() == 1) {
    estimates = backward::solve_grid(problem, points, opt);
  } else {
    estimates = backward::solve_grid(problem, points, opt, n_list);
  }

  emit(o.out_path, o.format == "json" ? io::estimates_json(estimates, problem.dimension())
                                      : io::estimates_csv(estimates, problem.dimension()));
  for (const auto& e : estimates) {
    if (e.failed) {
      std::cerr << "error: all particles faulted at a query point\n";
      return kExitSolver;
    }
    if (e.fault_warning) std::cerr << "warning: more than 1% of particles faulted at a point\n";
  }
  return kExitOk;
}

int run_forward(const CommonOpts& o, const std::string& launch_text,
                const std::string& interval_text, int bins) {
  const Problem problem = specfile::load_spec(o.spec_path);
  const auto n_list = parse_n_list(o.n_text);
  if (n_list.size() != 1) throw ConfigError("forward takes a scalar --n");

  forward::ForwardOptions opt;
  std::tie(opt.launch_lo, opt.launch_hi) = parse_interval(launch_text, "--launch");
  std::tie(opt.lo, opt.hi) = parse_interval(interval_text, "--interval");
  opt.bins = bins;
  opt.n_particles = n_list[0];
  opt.dt = o.dt;
  opt.seed = o.seed;
  opt.workers = resolve_workers(o.workers);

  const auto solution = forward::solve_forward(problem, opt);
  emit(o.out_path, o.format == "json" ? io::binned_json(solution) : io::binned_csv(solution));
  for (const auto& w : solution.warnings) std::cerr << "warning: " << w << "\n";
  if (solution.overflow > 0)
    std::cerr << "note: " << solution.overflow << " particle(s) outside the output interval\n";
  return kExitOk;
}

int run_endpoints(const CommonOpts& o) {
  if (o.out_path == "-") throw ConfigError("endpoints needs --out (binary cache file)");
  const Problem problem = specfile::load_spec(o.spec_path);
  const auto points = query_points(o, problem.dimension());
  const auto n_list = parse_n_list(o.n_text);
  if (n_list.size() != 1) throw ConfigError("endpoints takes a scalar --n");

  backward::SolveOptions opt;
  opt.n_particles = n_list[0];
  opt.dt = o.dt;
  opt.seed = o.seed;
  opt.workers = resolve_workers(o.workers);

  std::vector<backward::EndpointSet> sets;
  sets.reserve(points.size());
  for (const auto& x : points) sets.push_back(backward::trace_endpoints(problem, x, opt));
  cache::save_endpoint_sets(o.out_path, sets);
  return kExitOk;
}

int run_reapply(const CommonOpts& o, const std::string& cache_path, const std::string& phi_sel) {
  const Problem problem = specfile::load_spec(o.spec_path);
  const auto sets = cache::load_endpoint_sets(cache_path);
  if (sets.empty()) throw ConfigError("endpoint cache holds no points");
  if (sets.front().dimension != problem.dimension())
    throw ConfigError("endpoint cache dimension does not match the spec");
  if (sets.front().horizon != problem.horizon())
    throw ConfigError("endpoint cache horizon does not match the spec");

  // Selected initial conditions, in a deterministic order.
  std::vector<std::pair<std::string, const expr::Expression*>> phis;
  auto add_phi = [&](const std::string& name) {
    if (name == "phi") {
      phis.emplace_back("phi", &problem.initial());
      return;
    }
    for (const auto& [ename, e] : problem.extra_initials()) {
      if (ename == name) {
        phis.emplace_back(name, &e);
        return;
      }
    }
    throw ConfigError("unknown initial condition '" + name + "'");
  };
  if (phi_sel == "all") {
    add_phi("phi");
    for (const auto& [name, e] : problem.extra_initials()) phis.emplace_back(name, &e);
  } else {
    for (const std::string& name : split(phi_sel, ',')) add_phi(name);
  }

  const int workers = resolve_workers(o.workers);
  std::vector<backward::PointEstimate> estimates;
  std::vector<std::string> names;
  for (const auto& set : sets) {
    for (const auto& [name, e] : phis) {
      estimates.push_back(backward::evaluate_with_endpoints(set, *e, workers));
      names.push_back(name);
    }
  }

  const bool with_phi_column = phis.size() > 1;
  emit(o.out_path, o.format == "json"
                       ? io::estimates_json(estimates, problem.dimension(),
                                            with_phi_column ? names : std::vector<std::string>{})
                       : io::estimates_csv(estimates, problem.dimension(), with_phi_column, names));
  for (const auto& e : estimates)
    if (e.failed) return kExitSolver;
  return kExitOk;
}

int run_reference(const CommonOpts& o, const std::string& oracle, const std::string& nodes_text,
                  int fd_steps, double gauss_d, double gauss_s, double gauss_lambda,
                  double gauss_t) {
  if (oracle == "gaussian") {
    const auto points = query_points(o, 1);
    std::string out = "x1,f\n";
    for (const auto& p : points) {
      out += format_double(p[0]) + "," +
             format_double(reference::gaussian_oracle(gauss_d, gauss_s, p[0], gauss_t,
                                                      gauss_lambda)) +
             "\n";
    }
    emit(o.out_path, out);
    return kExitOk;
  }
  if (oracle != "fd") throw ConfigError("--oracle must be fd or gaussian");

  const Problem problem = specfile::load_spec(o.spec_path);
  reference::FdOptions opt;
  opt.box = problem.sample_box();
  const auto nodes = split(nodes_text, ',');
  if (nodes.size() != static_cast<std::size_t>(problem.dimension()))
    throw ConfigError("--grid-nodes needs one count per axis");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    opt.nodes[k] = static_cast<int>(parse_real(nodes[k], "grid nodes"));
    if (opt.nodes[k] < 3) throw ConfigError("--grid-nodes must be >= 3");
  }
  opt.time_steps = fd_steps;

  const auto solution = reference::fd_solve(problem, opt);
  emit(o.out_path, o.format == "json" ? io::grid_json(solution) : io::grid_csv(solution));
  for (const auto& w : solution.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

int run_converge(const CommonOpts& o, const std::string& study, double tau, int qv_n, int qv_m,
                 int seeds, const std::string& dt_list_text, double oracle_value,
                 bool have_oracle_value, const std::string& nodes_text, int fd_steps,
                 const std::string& launch_text, const std::string& interval_text, int bins,
                 std::uint64_t n_fwd, std::uint64_t n_bwd, const std::string& gauss_text) {
  const int workers = resolve_workers(o.workers);
  diagnostics::ConvergenceReport report;

  if (study == "qv") {
    report = diagnostics::quadratic_variation_experiment(tau, qv_n, qv_m, o.seed, workers);
  } else if (study == "n") {
    const Problem problem = specfile::load_spec(o.spec_path);
    const auto points = query_points(o, problem.dimension());
    if (points.size() != 1) throw ConfigError("the N-scaling study takes a single point");
    const auto n_list = parse_n_list(o.n_text);
    report = diagnostics::n_scaling_study(problem, points[0], o.dt, n_list, seeds, o.seed,
                                          workers);
  } else if (study == "dt") {
    const Problem problem = specfile::load_spec(o.spec_path);
    const auto points = query_points(o, problem.dimension());
    if (points.size() != 1) throw ConfigError("the dt-scaling study takes a single point");
    const auto n_list = parse_n_list(o.n_text);
    if (n_list.size() != 1) throw ConfigError("the dt-scaling study takes a scalar --n");
    std::vector<double> dt_list;
    for (const std::string& c : split(dt_list_text, ','))
      dt_list.push_back(parse_real(c, "--dt-list"));
    if (dt_list.size() < 2) throw ConfigError("--dt-list needs at least two values");

    double oracle = oracle_value;
    if (!have_oracle_value) {
      reference::FdOptions fopt;
      fopt.box = problem.sample_box();
      for (const std::string& part : split(nodes_text, ','))
        fopt.nodes[0] = static_cast<int>(parse_real(part, "fd nodes"));
      fopt.time_steps = fd_steps;
      oracle = reference::fd_solve(problem, fopt).value(points[0]);
    }
    report = diagnostics::dt_scaling_study(problem, points[0], n_list[0], dt_list, oracle,
                                           o.seed, workers);
  } else if (study == "compare") {
    const Problem problem = specfile::load_spec(o.spec_path);
    forward::ForwardOptions fopt;
    std::tie(fopt.launch_lo, fopt.launch_hi) = parse_interval(launch_text, "--launch");
    std::tie(fopt.lo, fopt.hi) = parse_interval(interval_text, "--interval");
    fopt.bins = bins;
    fopt.n_particles = n_fwd;
    fopt.dt = o.dt;
    fopt.seed = o.seed;
    fopt.workers = workers;
    std::function<double(double)> oracle;
    if (!gauss_text.empty()) {
      const auto parts = split(gauss_text, ':');
      if (parts.size() < 2 || parts.size() > 3)
        throw ConfigError("--gauss-oracle must be D:s[:lambda]");
      const double d = parse_real(parts[0], "oracle D");
      const double s = parse_real(parts[1], "oracle s");
      const double lam = parts.size() == 3 ? parse_real(parts[2], "oracle lambda") : 0.0;
      const double horizon = problem.horizon();
      oracle = [=](double y) { return reference::gaussian_oracle(d, s, y, horizon, lam); };
    }
    report = diagnostics::compare_methods(problem, fopt, n_bwd, oracle);
  } else {
    throw ConfigError("--study must be one of qv, n, dt, compare");
  }

  std::string bytes;
  if (o.format == "json") {
    bytes = io::report_json(report);
  } else if (o.format == "csv") {
    bytes = io::report_csv(report);
  } else {
    bytes = io::report_text(report);
  }
  emit(o.out_path, bytes);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backward Feynman-Kac Monte-Carlo solver for linear parabolic PDEs"};
  app.require_subcommand(1);

  CommonOpts o;
  auto add_common = [&](CLI::App* cmd, bool needs_spec, bool needs_seed = true) {
    if (needs_spec) cmd->add_option("--spec", o.spec_path, "problem-spec file")->required();
    cmd->add_option("--points", o.points_text, "query points 'x1,..;x1,..'");
    cmd->add_option("--grid", o.grid_text, "query grid 'min:max:count[,..]'");
    cmd->add_option("--n", o.n_text, "particles per point (scalar or comma list)");
    cmd->add_option("--dt", o.dt, "time step");
    if (needs_seed) cmd->add_option("--seed", o.seed, "master seed (mandatory)")->required();
    cmd->add_option("--workers", o.workers, "worker threads (default: FKMC_WORKERS or 1)");
    cmd->add_option("--out", o.out_path, "output path ('-' = stdout)");
    cmd->add_option("--format", o.format, "csv | json (| text for converge)");
  };

  auto* solve = app.add_subcommand("solve", "backward Monte-Carlo point estimates");
  add_common(solve, true);

  auto* fwd = app.add_subcommand("forward", "forward Monte-Carlo binned solution");
  std::string launch_text, interval_text;
  int bins = 50;
  add_common(fwd, true);
  fwd->add_option("--launch", launch_text, "launch interval a:b")->required();
  fwd->add_option("--interval", interval_text, "output interval a:b")->required();
  fwd->add_option("--bins", bins, "bin count")->required();

  auto* endpoints = app.add_subcommand("endpoints", "trace and cache backward endpoints");
  add_common(endpoints, true);

  auto* reapply = app.add_subcommand("reapply", "re-evaluate cached endpoints under new phi");
  std::string cache_path, phi_sel = "phi";
  add_common(reapply, true);
  reapply->add_option("--cache", cache_path, "endpoint cache file")->required();
  reapply->add_option("--phi", phi_sel, "phi | phi_extra.m[,..] | all (default phi)");

  auto* reference_cmd = app.add_subcommand("reference", "deterministic oracles");
  std::string oracle_kind = "fd", nodes_text = "3201";
  int fd_steps = 2000;
  double gauss_d = 0.5, gauss_s = 1.0, gauss_lambda = 0.0, gauss_t = 1.0;
  add_common(reference_cmd, false, false);
  reference_cmd->add_option("--spec", o.spec_path, "problem-spec file (fd oracle)");
  reference_cmd->add_option("--oracle", oracle_kind, "fd | gaussian");
  reference_cmd->add_option("--grid-nodes", nodes_text, "fd nodes per axis (comma list)");
  reference_cmd->add_option("--fd-steps", fd_steps, "fd time steps");
  reference_cmd->add_option("--gauss-d", gauss_d, "gaussian oracle D");
  reference_cmd->add_option("--gauss-s", gauss_s, "gaussian oracle initial width s");
  reference_cmd->add_option("--gauss-lambda", gauss_lambda, "gaussian oracle lambda");
  reference_cmd->add_option("--T", gauss_t, "gaussian oracle horizon");

  auto* converge = app.add_subcommand("converge", "convergence diagnostics");
  std::string study, dt_list_text, conv_gauss_text;
  double tau = 1.0, oracle_value = 0.0;
  int qv_n = 1000, qv_m = 10000, seeds = 50;
  std::uint64_t n_fwd = 100000, n_bwd = 10000;
  int conv_bins = 50;
  std::string conv_launch, conv_interval, conv_nodes = "3201";
  int conv_fd_steps = 2000;
  add_common(converge, false);
  converge->add_option("--spec", o.spec_path, "problem-spec file");
  converge->add_option("--study", study, "qv | n | dt | compare")->required();
  converge->add_option("--tau", tau, "qv: interval length");
  converge->add_option("--qv-n", qv_n, "qv: subdivisions");
  converge->add_option("--qv-m", qv_m, "qv: realizations");
  converge->add_option("--seeds", seeds, "n study: independent seeds per N");
  converge->add_option("--dt-list", dt_list_text, "dt study: halving dt values");
  auto* ov = converge->add_option("--oracle-value", oracle_value, "dt study: exact value");
  converge->add_option("--fd-nodes", conv_nodes, "dt study: fd oracle nodes");
  converge->add_option("--fd-steps", conv_fd_steps, "dt study: fd oracle steps");
  converge->add_option("--launch", conv_launch, "compare: launch interval a:b");
  converge->add_option("--interval", conv_interval, "compare: output interval a:b");
  converge->add_option("--bins", conv_bins, "compare: bin count");
  converge->add_option("--n-fwd", n_fwd, "compare: forward particles");
  converge->add_option("--n-bwd", n_bwd, "compare: backward particles per bin center");
  converge->add_option("--gauss-oracle", conv_gauss_text, "compare: oracle D:s[:lambda]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve->parsed()) return run_solve(o);
    if (fwd->parsed()) return run_forward(o, launch_text, interval_text, bins);
    if (endpoints->parsed()) return run_endpoints(o);
    if (reapply->parsed()) return run_reapply(o, cache_path, phi_sel);
    if (reference_cmd->parsed())
      return run_reference(o, oracle_kind, nodes_text, fd_steps, gauss_d, gauss_s, gauss_lambda,
                           gauss_t);
    if (converge->parsed())
      return run_converge(o, study, tau, qv_n, qv_m, seeds, dt_list_text, oracle_value,
                          !ov->empty(), conv_nodes, conv_fd_steps, conv_launch, conv_interval,
                          conv_bins, n_fwd, n_bwd, conv_gauss_text);
    std::cerr << "error: no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const specfile::SpecFileError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const expr::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
