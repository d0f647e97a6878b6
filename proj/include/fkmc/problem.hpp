#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkmc/expr.hpp"

namespace fkmc {

inline constexpr int kMaxDim = 9;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
using Box = std::vector<Interval>;

/// Lower-triangular factor A with A Aᵀ = 2D(x,t), packed row-wise.
struct DiffusionFactor {
  int dim = 0;
  std::array<double, kMaxDim*(kMaxDim + 1) / 2> a{};

  double operator()(int row, int col) const {  // row >= col
    return a[static_cast<std::size_t>(row * (row + 1) / 2 + col)];
  }
  double& at(int row, int col) {
    return a[static_cast<std::size_t>(row * (row + 1) / 2 + col)];
  }

  /// out = A * z.
  void apply(std::span<const double> z, std::span<double> out) const {
    for (int k = 0; k < dim; ++k) {
      double s = 0.0;
      for (int l = 0; l <= k; ++l) s += (*this)(k, l) * z[static_cast<std::size_t>(l)];
      out[static_cast<std::size_t>(k)] = s;
    }
  }
};

struct ValidationError : std::runtime_error {
  ValidationError(std::string coeff, std::vector<double> pt, double time, std::string why)
      : std::runtime_error("validation failed for " + coeff + " at " + point_string(pt, time) +
                           ": " + why),
        coefficient(std::move(coeff)),
        point(std::move(pt)),
        t(time),
        reason(std::move(why)) {}

  static std::string point_string(const std::vector<double>& pt, double time);

  std::string coefficient;
  std::vector<double> point;
  double t;
  std::string reason;
};

/// A validated linear parabolic PDE
///   df/dt = d/dx^k ( D^{kl} df/dx^l ) + lambda f + S,   f(x,0) = phi(x),
/// on 0 <= t <= T, with symmetric D. Immutable after construction; all
/// evaluation entry points are const and safe to call concurrently.
class Problem {
 public:
  struct Spec {
    int dimension = 1;
    double horizon = 1.0;
    // Upper-triangle entries (k <= l), row-major packed; missing entries are 0.
    std::vector<std::optional<expr::Expression>> diffusion;
    std::optional<expr::Expression> reaction;   // lambda, absent == 0
    std::optional<expr::Expression> source;     // S, absent == 0
    expr::Expression initial;                   // phi
    std::vector<std::pair<std::string, expr::Expression>> extra_initials;  // phi_extra.m
    Box sample_box;  // optional; used for default validation sampling
  };

  explicit Problem(Spec spec);

  int dimension() const { return dim_; }
  double horizon() const { return horizon_; }
  const Box& sample_box() const { return sample_box_; }

  const expr::Expression& diffusion_entry(int k, int l) const;  // symmetric access
  const expr::Expression& drift_entry(int k) const { return drift_[static_cast<std::size_t>(k)]; }
  const expr::Expression* reaction() const { return reaction_ ? &*reaction_ : nullptr; }
  const expr::Expression* source() const { return source_ ? &*source_ : nullptr; }
  const expr::Expression& initial() const { return initial_; }
  const std::vector<std::pair<std::string, expr::Expression>>& extra_initials() const {
    return extra_initials_;
  }

  /// mu^k = sum_l d D^{kl} / d x^l. Returns false on a non-finite value
  /// (trajectory-fault signal).
  bool drift(std::span<const double> x, double t, std::span<double> mu) const;

  /// Lower-triangular factorization of 2 D(x,t); for d=1 the scalar sqrt(2D).
  /// Leading minors below -1e-10*|2D|_max fail; minors in [-tol, 0] clamp to 0.
  bool diffusion_factor(std::span<const double> x, double t, DiffusionFactor& out) const;

  bool constant_coefficients() const { return const_factor_.has_value(); }
  const DiffusionFactor* constant_factor() const {
    return const_factor_ ? &*const_factor_ : nullptr;
  }
  const std::vector<double>* constant_drift() const {
    return const_drift_ ? &*const_drift_ : nullptr;
  }
  bool reaction_is_zero() const { return reaction_zero_; }
  bool source_is_zero() const { return source_zero_; }
  bool drift_is_zero() const { return drift_zero_; }

  /// Checks every coefficient (and the factorization) at each sample point;
  /// throws ValidationError naming the first failing point and coefficient.
  void validate(std::span<const std::pair<std::vector<double>, double>> samples) const;

  /// Default validation sweep: 128 Halton points in sample_box x [0, T].
  /// Requires a sample box (from the spec file or set explicitly).
  void validate() const;

 private:
  int pack_index(int k, int l) const {  // k <= l
    return k * (2 * dim_ - k - 1) / 2 + l;
  }

  int dim_;
  double horizon_;
  std::vector<expr::Expression> diffusion_;  // packed upper triangle, k <= l
  std::vector<expr::Expression> drift_;
  std::optional<expr::Expression> reaction_;
  std::optional<expr::Expression> source_;
  expr::Expression initial_;
  std::vector<std::pair<std::string, expr::Expression>> extra_initials_;
  Box sample_box_;

  std::optional<DiffusionFactor> const_factor_;
  std::optional<std::vector<double>> const_drift_;
  bool reaction_zero_ = false;
  bool source_zero_ = false;
  bool drift_zero_ = false;
};

/// Halton low-discrepancy points over box x [0, T] (validation sampling).
std::vector<std::pair<std::vector<double>, double>> halton_samples(const Box& box, double horizon,
                                                                   int count);

}  // namespace fkmc
