#include "fkmc/reference.hpp"

#include <cmath>
#include <numbers>

#include "fkmc/util.hpp"

namespace fkmc::reference {

double gaussian_oracle(double d_const, double s, double x, double horizon, double lambda_const) {
  if (d_const < 0.0) throw std::invalid_argument("D must be >= 0");
  if (!(s > 0.0)) throw std::invalid_argument("initial width s must be > 0");
  const double variance = s * s + 2.0 * d_const * horizon;
  const double density =
      std::exp(-x * x / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
  return std::exp(lambda_const * horizon) * density;
}

double GridSolution::at_node(int i, int j) const {
  if (dim == 1) return values[static_cast<std::size_t>(i)];
  const std::size_t ny = axes[1].size();
  return values[static_cast<std::size_t>(i) * ny + static_cast<std::size_t>(j)];
}

double GridSolution::value(std::span<const double> x) const {
  auto locate = [](const std::vector<double>& axis, double v) {
    const double h = axis[1] - axis[0];
    const double u = (v - axis[0]) / h;
    int i = static_cast<int>(std::floor(u));
    i = std::max(0, std::min(i, static_cast<int>(axis.size()) - 2));
    // Snap to exact node hits so probes placed on the grid read the node
    // value, not a one-ulp interpolation of it.
    for (int j = std::max(0, i - 1); j <= std::min(static_cast<int>(axis.size()) - 1, i + 2); ++j) {
      if (v == axis[static_cast<std::size_t>(j)])
        return std::pair<int, double>(std::min(j, static_cast<int>(axis.size()) - 2),
                                      j + 1 == static_cast<int>(axis.size()) ? 1.0 : 0.0);
    }
    return std::pair<int, double>(i, u - i);
  };
  if (dim == 1) {
    const auto [i, w] = locate(axes[0], x[0]);
    return (1.0 - w) * at_node(i) + w * at_node(i + 1);
  }
  const auto [i, wx] = locate(axes[0], x[0]);
  const auto [j, wy] = locate(axes[1], x[1]);
  return (1.0 - wx) * ((1.0 - wy) * at_node(i, j) + wy * at_node(i, j + 1)) +
         wx * ((1.0 - wy) * at_node(i + 1, j) + wy * at_node(i + 1, j + 1));
}

namespace {

std::vector<double> make_axis(const Interval& iv, int n) {
  std::vector<double> axis(static_cast<std::size_t>(n));
  const double h = (iv.hi - iv.lo) / (n - 1);
  for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = iv.lo + i * h;
  return axis;
}

// Evaluates e over a list of 1-D abscissae at time t (no-op early out for
// literal constants).
void eval_axis(const expr::Expression& e, const std::vector<double>& xs, double t,
               std::vector<double>& out) {
  out.resize(xs.size());
  if (e.is_constant()) {
    std::fill(out.begin(), out.end(), e.constant_value());
    return;
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i] = e.eval(std::span<const double>(&xs[i], 1), t);
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                  std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

void check_initial_decay(const std::vector<double>& phi_on_boundary, double max_abs_phi) {
  if (max_abs_phi == 0.0) return;  // phi == 0 decays trivially
  for (double v : phi_on_boundary) {
    if (std::abs(v) >= 1e-8 * max_abs_phi)
      throw std::invalid_argument(
          "truncation box too small: |phi| at the boundary is not below 1e-8 of its maximum");
  }
}

GridSolution fd_solve_1d(const Problem& problem, const FdOptions& opt) {
  const int n = opt.nodes[0];
  const auto axis = make_axis(opt.box[0], n);
  const double h = axis[1] - axis[0];
  const double dt = problem.horizon() / opt.time_steps;

  // Half-node abscissae for the flux form.
  std::vector<double> half(static_cast<std::size_t>(n - 1));
  for (int i = 0; i + 1 < n; ++i) half[static_cast<std::size_t>(i)] = 0.5 * (axis[i] + axis[i + 1]);

  const auto& d_expr = problem.diffusion_entry(0, 0);
  const expr::Expression* lam = problem.reaction();
  const expr::Expression* src = problem.source();

  std::vector<double> f(static_cast<std::size_t>(n));
  double max_phi = 0.0;
  for (int i = 0; i < n; ++i) {
    f[static_cast<std::size_t>(i)] = problem.initial().eval(std::span<const double>(&axis[i], 1), 0.0);
    max_phi = std::max(max_phi, std::abs(f[static_cast<std::size_t>(i)]));
  }
  check_initial_decay({f.front(), f.back()}, max_phi);
  f.front() = 0.0;
  f.back() = 0.0;

  std::vector<double> d_old, d_new, lam_old, lam_new, src_old, src_new;
  eval_axis(d_expr, half, 0.0, d_old);
  if (lam) eval_axis(*lam, axis, 0.0, lam_old);
  if (src) eval_axis(*src, axis, 0.0, src_old);

  const std::size_t m = static_cast<std::size_t>(n - 2);  // interior unknowns
  std::vector<double> sub(m), diag(m), sup(m), rhs(m);
  bool boundary_warning = false;

  for (int step = 0; step < opt.time_steps; ++step) {
    const double t_new = (step + 1 == opt.time_steps) ? problem.horizon() : (step + 1) * dt;
    eval_axis(d_expr, half, t_new, d_new);
    if (lam) eval_axis(*lam, axis, t_new, lam_new);
    if (src) eval_axis(*src, axis, t_new, src_new);

    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;  // grid index
      const double a_old = d_old[i - 1] / (h * h), c_old = d_old[i] / (h * h);
      const double a_new = d_new[i - 1] / (h * h), c_new = d_new[i] / (h * h);
      const double b_old = -(a_old + c_old) + (lam ? lam_old[i] : 0.0);
      const double b_new = -(a_new + c_new) + (lam ? lam_new[i] : 0.0);

      sub[k] = -0.5 * dt * a_new;
      diag[k] = 1.0 - 0.5 * dt * b_new;
      sup[k] = -0.5 * dt * c_new;

      const double lf = a_old * f[i - 1] + b_old * f[i] + c_old * f[i + 1];
      rhs[k] = f[i] + 0.5 * dt * lf;
      if (src) rhs[k] += 0.5 * dt * (src_old[i] + src_new[i]);
    }
    thomas_solve(sub, diag, sup, rhs);
    for (std::size_t k = 0; k < m; ++k) f[k + 1] = rhs[k];

    double max_f = 0.0;
    for (double v : f) max_f = std::max(max_f, std::abs(v));
    // With pinned zero-Dirichlet values the leak shows up one node in.
    if (std::max(std::abs(f[1]), std::abs(f[m])) > 1e-6 * max_f) boundary_warning = true;

    d_old.swap(d_new);
    lam_old.swap(lam_new);
    src_old.swap(src_new);
  }

  GridSolution sol;
  sol.dim = 1;
  sol.axes[0] = axis;
  sol.values = std::move(f);
  sol.final_time = problem.horizon();
  sol.box = opt.box;
  if (boundary_warning)
    sol.warnings.push_back("solution mass reached the truncated boundary (> 1e-6 of max |f|)");
  return sol;
}

GridSolution fd_solve_2d(const Problem& problem, const FdOptions& opt) {
  const int nx = opt.nodes[0], ny = opt.nodes[1];
  const auto ax = make_axis(opt.box[0], nx);
  const auto ay = make_axis(opt.box[1], ny);
  const double hx = ax[1] - ax[0], hy = ay[1] - ay[0];
  const double dt = problem.horizon() / opt.time_steps;

  const auto& d11 = problem.diffusion_entry(0, 0);
  const auto& d12 = problem.diffusion_entry(0, 1);
  const auto& d22 = problem.diffusion_entry(1, 1);
  const expr::Expression* lam = problem.reaction();
  const expr::Expression* src = problem.source();

  auto eval2 = [&](const expr::Expression& e, double x, double y, double t) {
    const std::array<double, 2> p{x, y};
    return e.eval(p, t);
  };

  // Explicit-scheme stability bound dt <= h^2 / (4 max|D|), |D| sampled on
  // the grid at a few time slices.
  double max_d = 0.0;
  for (int s = 0; s <= 4; ++s) {
    const double t = problem.horizon() * s / 4.0;
    for (int i = 0; i < nx; i += std::max(1, nx / 32)) {
      for (int j = 0; j < ny; j += std::max(1, ny / 32)) {
        max_d = std::max({max_d, std::abs(eval2(d11, ax[i], ay[j], t)),
                          std::abs(eval2(d12, ax[i], ay[j], t)),
                          std::abs(eval2(d22, ax[i], ay[j], t))});
      }
    }
  }
  const double h_min = std::min(hx, hy);
  if (max_d > 0.0 && dt > h_min * h_min / (4.0 * max_d))
    throw std::invalid_argument("explicit 2-D scheme unstable: need dt <= h^2/(4 max|D|) = " +
                                format_double(h_min * h_min / (4.0 * max_d)));

  const std::size_t stride = static_cast<std::size_t>(ny);
  auto idx = [stride](int i, int j) {
    return static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(j);
  };

  std::vector<double> f(static_cast<std::size_t>(nx) * ny);
  double max_phi = 0.0;
  std::vector<double> phi_boundary;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const std::array<double, 2> p{ax[i], ay[j]};
      const double v = problem.initial().eval(p, 0.0);
      f[idx(i, j)] = v;
      max_phi = std::max(max_phi, std::abs(v));
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) phi_boundary.push_back(v);
    }
  }
  check_initial_decay(phi_boundary, max_phi);
  for (int i = 0; i < nx; ++i) f[idx(i, 0)] = f[idx(i, ny - 1)] = 0.0;
  for (int j = 0; j < ny; ++j) f[idx(0, j)] = f[idx(nx - 1, j)] = 0.0;

  // Coefficient fields, refreshed per step unless constant.
  std::vector<double> d11h((static_cast<std::size_t>(nx) - 1) * ny);   // at (i+1/2, j)
  std::vector<double> d22h(static_cast<std::size_t>(nx) * (ny - 1));   // at (i, j+1/2)
  std::vector<double> d12n(static_cast<std::size_t>(nx) * ny);         // at nodes
  std::vector<double> lam_n, src_n;
  const bool coeffs_const = d11.is_constant() && d12.is_constant() && d22.is_constant() &&
                            (!lam || lam->is_constant()) && (!src || src->is_constant());

  auto fill_fields = [&](double t) {
    for (int i = 0; i + 1 < nx; ++i)
      for (int j = 0; j < ny; ++j)
        d11h[static_cast<std::size_t>(i) * stride + j] = eval2(d11, 0.5 * (ax[i] + ax[i + 1]), ay[j], t);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j + 1 < ny; ++j)
        d22h[static_cast<std::size_t>(i) * (stride - 1) + j] =
            eval2(d22, ax[i], 0.5 * (ay[j] + ay[j + 1]), t);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) d12n[idx(i, j)] = eval2(d12, ax[i], ay[j], t);
    if (lam) {
      lam_n.resize(f.size());
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) lam_n[idx(i, j)] = eval2(*lam, ax[i], ay[j], t);
    }
    if (src) {
      src_n.resize(f.size());
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) src_n[idx(i, j)] = eval2(*src, ax[i], ay[j], t);
    }
  };
  fill_fields(0.0);

  std::vector<double> fnew(f.size(), 0.0);
  bool boundary_warning = false;
  auto d22half = [&](int i, int j) {  // value at (i, j+1/2)
    return d22h[static_cast<std::size_t>(i) * (stride - 1) + j];
  };

  for (int step = 0; step < opt.time_steps; ++step) {
    const double t = step * dt;
    if (!coeffs_const && step > 0) fill_fields(t);

    for (int i = 1; i + 1 < nx; ++i) {
      for (int j = 1; j + 1 < ny; ++j) {
        const double fij = f[idx(i, j)];
        const double flux_x = (d11h[static_cast<std::size_t>(i) * stride + j] * (f[idx(i + 1, j)] - fij) -
                               d11h[static_cast<std::size_t>(i - 1) * stride + j] * (fij - f[idx(i - 1, j)])) /
                              (hx * hx);
        const double flux_y = (d22half(i, j) * (f[idx(i, j + 1)] - fij) -
                               d22half(i, j - 1) * (fij - f[idx(i, j - 1)])) /
                              (hy * hy);
        // d/dx (D12 d/dy f) + d/dy (D12 d/dx f), centered.
        const double cross_x =
            (d12n[idx(i + 1, j)] * (f[idx(i + 1, j + 1)] - f[idx(i + 1, j - 1)]) -
             d12n[idx(i - 1, j)] * (f[idx(i - 1, j + 1)] - f[idx(i - 1, j - 1)])) /
            (4.0 * hx * hy);
        const double cross_y =
            (d12n[idx(i, j + 1)] * (f[idx(i + 1, j + 1)] - f[idx(i - 1, j + 1)]) -
             d12n[idx(i, j - 1)] * (f[idx(i + 1, j - 1)] - f[idx(i - 1, j - 1)])) /
            (4.0 * hx * hy);
        double rate = flux_x + flux_y + cross_x + cross_y;
        if (lam) rate += lam_n[idx(i, j)] * fij;
        if (src) rate += src_n[idx(i, j)];
        fnew[idx(i, j)] = fij + dt * rate;
      }
    }
    f.swap(fnew);

    double max_f = 0.0, edge = 0.0;
    for (int i = 1; i + 1 < nx; ++i)
      for (int j = 1; j + 1 < ny; ++j) {
        const double v = std::abs(f[idx(i, j)]);
        max_f = std::max(max_f, v);
        if (i == 1 || i == nx - 2 || j == 1 || j == ny - 2) edge = std::max(edge, v);
      }
    if (edge > 1e-6 * max_f) boundary_warning = true;
  }

  GridSolution sol;
  sol.dim = 2;
  sol.axes[0] = ax;
  sol.axes[1] = ay;
  sol.values = std::move(f);
  sol.final_time = problem.horizon();
  sol.box = opt.box;
  if (boundary_warning)
    sol.warnings.push_back("solution mass reached the truncated boundary (> 1e-6 of max |f|)");
  return sol;
}

}  // namespace

GridSolution fd_solve(const Problem& problem, const FdOptions& opt) {
  const int d = problem.dimension();
  if (d != 1 && d != 2) throw std::invalid_argument("fd_solve supports d = 1 and 2 only");
  if (opt.box.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("fd box must have one interval per axis");
  for (int k = 0; k < d; ++k) {
    if (!(opt.box[static_cast<std::size_t>(k)].lo < opt.box[static_cast<std::size_t>(k)].hi))
      throw std::invalid_argument("fd box intervals must be non-empty");
    if (opt.nodes[static_cast<std::size_t>(k)] < 3)
      throw std::invalid_argument("fd grid needs at least 3 nodes per axis");
  }
  if (opt.time_steps < 1) throw std::invalid_argument("fd needs at least one time step");
  return d == 1 ? fd_solve_1d(problem, opt) : fd_solve_2d(problem, opt);
}

namespace {

FdOptions refined(const FdOptions& opt, int dim, int level) {
  FdOptions r = opt;
  for (int k = 0; k < dim; ++k)
    r.nodes[static_cast<std::size_t>(k)] = ((opt.nodes[static_cast<std::size_t>(k)] - 1) << level) + 1;
  // CN is stable at any dt; the explicit 2-D scheme needs dt ~ h^2.
  const int factor = dim == 1 ? (1 << level) : (1 << (2 * level));
  r.time_steps = opt.time_steps * factor;
  return r;
}

}  // namespace

double fd_self_convergence(const Problem& problem, const FdOptions& opt,
                           std::span<const double> probe) {
  const GridSolution coarse = fd_solve(problem, opt);
  const GridSolution fine = fd_solve(problem, refined(opt, problem.dimension(), 1));
  return std::abs(coarse.value(probe) - fine.value(probe));
}

double fd_richardson_ratio(const Problem& problem, const FdOptions& opt,
                           std::span<const double> probe) {
  const double f0 = fd_solve(problem, opt).value(probe);
  const double f1 = fd_solve(problem, refined(opt, problem.dimension(), 1)).value(probe);
  const double f2 = fd_solve(problem, refined(opt, problem.dimension(), 2)).value(probe);
  return (f0 - f1) / (f1 - f2);
}

}  // namespace fkmc::reference
