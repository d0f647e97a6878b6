#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fkmc/backward.hpp"
#include "fkmc/diagnostics.hpp"
#include "fkmc/endpoint_cache.hpp"
#include "fkmc/forward.hpp"
#include "fkmc/reference.hpp"
#include "fkmc/specfile.hpp"
#include "fkmc/util.hpp"

namespace py = pybind11;
using namespace fkmc;

namespace {

backward::SolveOptions make_options(std::uint64_t n, double dt, std::uint64_t seed, int workers) {
  backward::SolveOptions o;
  o.n_particles = n;
  o.dt = dt;
  o.seed = seed;
  o.workers = workers;
  return o;
}

py::dict report_to_dict(const diagnostics::ConvergenceReport& r) {
  py::dict d;
  d["study"] = r.study;
  d["verdict"] = r.verdict();
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict jr;
    jr["parameter"] = row.parameter;
    jr["measured"] = row.measured;
    jr["expected"] = row.expected;
    jr["tolerance"] = row.tolerance;
    jr["pass"] = row.pass;
    jr["note"] = row.note;
    rows.append(jr);
  }
  d["rows"] = rows;
  d["warnings"] = r.warnings;
  if (!r.table_columns.empty()) {
    d["table_columns"] = r.table_columns;
    d["table"] = r.table;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_fkmc, m) {
  m.doc() = "backward Feynman-Kac Monte-Carlo solver for linear parabolic PDEs";

  py::register_exception<expr::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<specfile::SpecFileError>(m, "SpecFileError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<expr::Expression>(m, "Expression")
      .def_static("parse", &expr::Expression::parse, py::arg("text"), py::arg("dimension") = 1)
      .def("eval",
           [](const expr::Expression& e, const std::vector<double>& x, double t) {
             return e.eval(x, t);
           },
           py::arg("x"), py::arg("t") = 0.0)
      .def("differentiate",
           [](const expr::Expression& e, const std::string& var) {
             if (var == "t") return e.differentiate(expr::kTimeVar);
             if (var.size() == 2 && var[0] == 'x' && var[1] >= '1' && var[1] <= '9')
               return e.differentiate(var[1] - '1');
             throw std::invalid_argument("variable must be t or x1..x9");
           },
           py::arg("variable"))
      .def("__str__", &expr::Expression::to_string);

  py::class_<Problem>(m, "Problem")
      .def_static("load", &specfile::load_spec, py::arg("path"),
                  "read, parse and validate a problem-spec file")
      .def_static("parse", &specfile::parse_spec, py::arg("text"),
                  "parse a problem-spec string (without validation)")
      .def("validate", [](const Problem& p) { p.validate(); })
      .def_property_readonly("dimension", &Problem::dimension)
      .def_property_readonly("horizon", &Problem::horizon)
      .def("drift",
           [](const Problem& p, const std::vector<double>& x, double t) {
             std::vector<double> mu(static_cast<std::size_t>(p.dimension()));
             if (!p.drift(x, t, mu)) throw std::runtime_error("non-finite drift");
             return mu;
           },
           py::arg("x"), py::arg("t") = 0.0)
      .def("diffusion_factor",
           [](const Problem& p, const std::vector<double>& x, double t) {
             DiffusionFactor f;
             if (!p.diffusion_factor(x, t, f))
               throw std::runtime_error("diffusion factorization failed");
             std::vector<std::vector<double>> rows;
             for (int i = 0; i < p.dimension(); ++i) {
               std::vector<double> row(static_cast<std::size_t>(p.dimension()), 0.0);
               for (int j = 0; j <= i; ++j) row[static_cast<std::size_t>(j)] = f(i, j);
               rows.push_back(std::move(row));
             }
             return rows;
           },
           py::arg("x"), py::arg("t") = 0.0);

  py::class_<backward::PointEstimate>(m, "PointEstimate")
      .def_readonly("x", &backward::PointEstimate::x)
      .def_readonly("value", &backward::PointEstimate::value)
      .def_readonly("se", &backward::PointEstimate::se)
      .def_readonly("n_particles", &backward::PointEstimate::n_particles)
      .def_readonly("n_faulted", &backward::PointEstimate::n_faulted)
      .def_readonly("failed", &backward::PointEstimate::failed)
      .def_property_readonly("n_effective", &backward::PointEstimate::n_effective)
      .def("__repr__", [](const backward::PointEstimate& e) {
        return "PointEstimate(value=" + format_double(e.value) + ", se=" + format_double(e.se) +
               ")";
      });

  py::class_<backward::EndpointSet>(m, "EndpointSet")
      .def_readonly("n_particles", &backward::EndpointSet::n_particles)
      .def_readonly("n_faulted", &backward::EndpointSet::n_faulted)
      .def_readonly("x", &backward::EndpointSet::x)
      .def_property_readonly("n_records",
                             [](const backward::EndpointSet& s) { return s.records.size(); })
      .def("save",
           [](const backward::EndpointSet& s, const std::string& path) {
             cache::save_endpoint_sets(path, {s});
           },
           py::arg("path"))
      .def_static("load", [](const std::string& path) {
        auto sets = cache::load_endpoint_sets(path);
        if (sets.size() != 1) throw std::runtime_error("expected a single-point cache");
        return sets.front();
      });

  m.def(
      "solve_point",
      [](const Problem& p, const std::vector<double>& x, std::uint64_t n, double dt,
         std::uint64_t seed, int workers) {
        py::gil_scoped_release release;
        return backward::solve_point(p, x, make_options(n, dt, seed, workers));
      },
      py::arg("problem"), py::arg("x"), py::arg("n"), py::arg("dt"), py::arg("seed"),
      py::arg("workers") = 1);

  m.def(
      "solve_grid",
      [](const Problem& p, const std::vector<std::vector<double>>& points, std::uint64_t n,
         double dt, std::uint64_t seed, int workers, const std::vector<std::uint64_t>& n_list) {
        py::gil_scoped_release release;
        return backward::solve_grid(p, points, make_options(n, dt, seed, workers), n_list);
      },
      py::arg("problem"), py::arg("points"), py::arg("n"), py::arg("dt"), py::arg("seed"),
      py::arg("workers") = 1, py::arg("n_list") = std::vector<std::uint64_t>{});

  m.def(
      "trace_endpoints",
      [](const Problem& p, const std::vector<double>& x, std::uint64_t n, double dt,
         std::uint64_t seed, int workers) {
        py::gil_scoped_release release;
        return backward::trace_endpoints(p, x, make_options(n, dt, seed, workers));
      },
      py::arg("problem"), py::arg("x"), py::arg("n"), py::arg("dt"), py::arg("seed"),
      py::arg("workers") = 1);

  m.def(
      "evaluate_with_endpoints",
      [](const backward::EndpointSet& s, const expr::Expression& phi, int workers) {
        py::gil_scoped_release release;
        return backward::evaluate_with_endpoints(s, phi, workers);
      },
      py::arg("endpoints"), py::arg("phi"), py::arg("workers") = 1);

  py::class_<forward::BinnedSolution>(m, "BinnedSolution")
      .def_readonly("bins", &forward::BinnedSolution::bins)
      .def_readonly("bin_width", &forward::BinnedSolution::bin_width)
      .def_readonly("estimate", &forward::BinnedSolution::estimate)
      .def_readonly("se", &forward::BinnedSolution::se)
      .def_readonly("count", &forward::BinnedSolution::count)
      .def_readonly("overflow", &forward::BinnedSolution::overflow)
      .def_readonly("warnings", &forward::BinnedSolution::warnings)
      .def("center", &forward::BinnedSolution::center, py::arg("bin"));

  m.def(
      "solve_forward",
      [](const Problem& p, double launch_lo, double launch_hi, double lo, double hi, int bins,
         std::uint64_t n, double dt, std::uint64_t seed, int workers) {
        forward::ForwardOptions o;
        o.launch_lo = launch_lo;
        o.launch_hi = launch_hi;
        o.lo = lo;
        o.hi = hi;
        o.bins = bins;
        o.n_particles = n;
        o.dt = dt;
        o.seed = seed;
        o.workers = workers;
        py::gil_scoped_release release;
        return forward::solve_forward(p, o);
      },
      py::arg("problem"), py::arg("launch_lo"), py::arg("launch_hi"), py::arg("lo"),
      py::arg("hi"), py::arg("bins"), py::arg("n"), py::arg("dt"), py::arg("seed"),
      py::arg("workers") = 1);

  m.def("gaussian_oracle", &reference::gaussian_oracle, py::arg("d"), py::arg("s"), py::arg("x"),
        py::arg("horizon"), py::arg("lambda_") = 0.0);

  py::class_<reference::GridSolution>(m, "GridSolution")
      .def_readonly("dim", &reference::GridSolution::dim)
      .def_readonly("values", &reference::GridSolution::values)
      .def_readonly("warnings", &reference::GridSolution::warnings)
      .def_property_readonly("axes",
                             [](const reference::GridSolution& s) {
                               std::vector<std::vector<double>> axes;
                               for (int k = 0; k < s.dim; ++k)
                                 axes.push_back(s.axes[static_cast<std::size_t>(k)]);
                               return axes;
                             })
      .def("value", [](const reference::GridSolution& s, const std::vector<double>& x) {
        return s.value(x);
      });

  m.def(
      "fd_solve",
      [](const Problem& p, const std::vector<std::pair<double, double>>& box,
         const std::vector<int>& nodes, int time_steps) {
        reference::FdOptions o;
        for (const auto& [lo, hi] : box) o.box.push_back({lo, hi});
        for (std::size_t k = 0; k < nodes.size() && k < 2; ++k)
          o.nodes[k] = nodes[k];
        o.time_steps = time_steps;
        py::gil_scoped_release release;
        return reference::fd_solve(p, o);
      },
      py::arg("problem"), py::arg("box"), py::arg("nodes"), py::arg("time_steps"));

  m.def(
      "quadratic_variation_experiment",
      [](double tau, int n, int m, std::uint64_t seed, int workers) {
        diagnostics::ConvergenceReport r;
        {
          py::gil_scoped_release release;
          r = diagnostics::quadratic_variation_experiment(tau, n, m, seed, workers);
        }
        return report_to_dict(r);
      },
      py::arg("tau"), py::arg("n"), py::arg("m"), py::arg("seed"), py::arg("workers") = 1);

  m.def(
      "n_scaling_study",
      [](const Problem& p, const std::vector<double>& x, double dt,
         const std::vector<std::uint64_t>& n_list, int m_seeds, std::uint64_t seed, int workers) {
        diagnostics::ConvergenceReport r;
        {
          py::gil_scoped_release release;
          r = diagnostics::n_scaling_study(p, x, dt, n_list, m_seeds, seed, workers);
        }
        return report_to_dict(r);
      },
      py::arg("problem"), py::arg("x"), py::arg("dt"), py::arg("n_list"), py::arg("m_seeds"),
      py::arg("seed"), py::arg("workers") = 1);

  m.def(
      "dt_scaling_study",
      [](const Problem& p, const std::vector<double>& x, std::uint64_t n,
         const std::vector<double>& dt_list, double oracle_value, std::uint64_t seed,
         int workers) {
        diagnostics::ConvergenceReport r;
        {
          py::gil_scoped_release release;
          r = diagnostics::dt_scaling_study(p, x, n, dt_list, oracle_value, seed, workers);
        }
        return report_to_dict(r);
      },
      py::arg("problem"), py::arg("x"), py::arg("n"), py::arg("dt_list"),
      py::arg("oracle_value"), py::arg("seed"), py::arg("workers") = 1);

  m.def(
      "compare_methods",
      [](const Problem& p, double launch_lo, double launch_hi, double lo, double hi, int bins,
         std::uint64_t n_fwd, std::uint64_t n_bwd, double dt, std::uint64_t seed, int workers,
         const std::function<double(double)>& oracle) {
        forward::ForwardOptions o;
        o.launch_lo = launch_lo;
        o.launch_hi = launch_hi;
        o.lo = lo;
        o.hi = hi;
        o.bins = bins;
        o.n_particles = n_fwd;
        o.dt = dt;
        o.seed = seed;
        o.workers = workers;
        return report_to_dict(diagnostics::compare_methods(p, o, n_bwd, oracle));
      },
      py::arg("problem"), py::arg("launch_lo"), py::arg("launch_hi"), py::arg("lo"),
      py::arg("hi"), py::arg("bins"), py::arg("n_fwd"), py::arg("n_bwd"), py::arg("dt"),
      py::arg("seed"), py::arg("workers") = 1, py::arg("oracle") = nullptr);
}
