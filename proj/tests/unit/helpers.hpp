#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fkmc/problem.hpp"

namespace fkmc::test {

/// Builds a Problem from expression strings; diffusion lists the upper
/// triangle row-major: d=1 {D11}, d=2 {D11, D12, D22}.
inline Problem make_problem(int dim, double horizon, std::vector<std::string> diffusion,
                            std::string phi, std::string lambda = "", std::string source = "",
                            Box box = {}) {
  Problem::Spec spec;
  spec.dimension = dim;
  spec.horizon = horizon;
  for (const auto& d : diffusion)
    spec.diffusion.push_back(d.empty() ? std::optional<expr::Expression>{}
                                       : expr::Expression::parse(d, dim));
  spec.initial = expr::Expression::parse(phi, dim);
  if (!lambda.empty()) spec.reaction = expr::Expression::parse(lambda, dim);
  if (!source.empty()) spec.source = expr::Expression::parse(source, dim);
  spec.sample_box = std::move(box);
  return Problem(std::move(spec));
}

inline const char* kGaussPhi = "exp(-x1^2/2)/sqrt(2*3.141592653589793)";

/// The 1-D constant-coefficient benchmark: D = 0.5, phi = N(0,1) density.
inline Problem gauss_benchmark() {
  return make_problem(1, 1.0, {"0.5"}, kGaussPhi, "", "", {{-8.0, 8.0}});
}

/// The variable-coefficient benchmark D(x) = 0.5 (1 + 0.5 tanh x).
inline Problem tanh_benchmark() {
  return make_problem(1, 1.0, {"0.5*(1+0.5*tanh(x1))"}, kGaussPhi, "", "", {{-8.0, 8.0}});
}

}  // namespace fkmc::test
