#include "fkmc/problem.hpp"

#include <cmath>

#include "fkmc/util.hpp"

namespace fkmc {

std::string ValidationError::point_string(const std::vector<double>& pt, double time) {
  std::string s = "(";
  for (std::size_t i = 0; i < pt.size(); ++i) {
    if (i) s += ", ";
    s += format_double(pt[i]);
  }
  s += "; t=" + format_double(time) + ")";
  return s;
}

namespace {

// Cholesky of the symmetric matrix m (full d x d, row-major) with
// semi-definite clamping. Tolerance is relative to the largest |entry|.
bool cholesky_psd(std::span<const double> m, int d, DiffusionFactor& out) {
  double scale = 0.0;
  for (int i = 0; i < d * d; ++i) scale = std::max(scale, std::abs(m[static_cast<std::size_t>(i)]));
  const double tol = 1e-10 * scale;

  out.dim = d;
  for (int k = 0; k < d; ++k) {
    double pivot = m[static_cast<std::size_t>(k * d + k)];
    for (int j = 0; j < k; ++j) pivot -= out(k, j) * out(k, j);
    if (!std::isfinite(pivot) || pivot < -tol) return false;
    if (pivot <= 0.0) {
      // Degenerate (zero-diffusion) direction: zero pivot and column.
      out.at(k, k) = 0.0;
      for (int i = k + 1; i < d; ++i) out.at(i, k) = 0.0;
      continue;
    }
    const double akk = std::sqrt(pivot);
    out.at(k, k) = akk;
    for (int i = k + 1; i < d; ++i) {
      double s = m[static_cast<std::size_t>(i * d + k)];
      for (int j = 0; j < k; ++j) s -= out(i, j) * out(k, j);
      out.at(i, k) = s / akk;
    }
  }
  return true;
}

}  // namespace

Problem::Problem(Spec spec)
    : dim_(spec.dimension),
      horizon_(spec.horizon),
      initial_(std::move(spec.initial)),
      extra_initials_(std::move(spec.extra_initials)),
      sample_box_(std::move(spec.sample_box)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw std::invalid_argument("dimension must be in 1..9");
  if (!(horizon_ > 0.0)) throw std::invalid_argument("horizon T must be > 0");
  const std::size_t n_upper = static_cast<std::size_t>(dim_ * (dim_ + 1) / 2);
  if (spec.diffusion.size() != n_upper)
    throw std::invalid_argument("diffusion must have d(d+1)/2 upper-triangle entries");
  if (!sample_box_.empty() && sample_box_.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("sample box must have one interval per axis");

  diffusion_.reserve(n_upper);
  for (auto& e : spec.diffusion)
    diffusion_.push_back(e ? std::move(*e) : expr::Expression::constant(0.0));
  reaction_ = std::move(spec.reaction);
  source_ = std::move(spec.source);

  // mu^k = sum_l d D^{kl} / d x^l, assembled symbolically once.
  drift_.reserve(static_cast<std::size_t>(dim_));
  for (int k = 0; k < dim_; ++k) {
    expr::Expression mu = expr::Expression::constant(0.0);
    for (int l = 0; l < dim_; ++l) {
      expr::Expression term = diffusion_entry(k, l).differentiate(l);
      mu = expr::Expression::sum(mu, term);  // builder folds the zeros away
    }
    drift_.push_back(std::move(mu));
  }

  // Fast paths: cache the factor and drift when D is literally constant.
  // A constant matrix that fails to factorize is left uncached; validate()
  // is the place that reports it.
  bool all_const = true;
  for (const auto& e : diffusion_)
    if (!e.is_constant()) all_const = false;
  if (all_const) {
    std::vector<double> m(static_cast<std::size_t>(dim_ * dim_));
    for (int k = 0; k < dim_; ++k)
      for (int l = 0; l < dim_; ++l)
        m[static_cast<std::size_t>(k * dim_ + l)] = 2.0 * diffusion_entry(k, l).constant_value();
    DiffusionFactor f;
    if (cholesky_psd(m, dim_, f)) const_factor_ = f;
    const_drift_ = std::vector<double>(static_cast<std::size_t>(dim_), 0.0);
  }

  reaction_zero_ = !reaction_ || reaction_->is_literal_zero();
  source_zero_ = !source_ || source_->is_literal_zero();
  drift_zero_ = true;
  for (const auto& mu : drift_)
    if (!mu.is_literal_zero()) drift_zero_ = false;
}

const expr::Expression& Problem::diffusion_entry(int k, int l) const {
  if (k > l) std::swap(k, l);
  return diffusion_[static_cast<std::size_t>(pack_index(k, l))];
}

bool Problem::drift(std::span<const double> x, double t, std::span<double> mu) const {
  if (const_drift_) {
    for (int k = 0; k < dim_; ++k) mu[static_cast<std::size_t>(k)] = (*const_drift_)[static_cast<std::size_t>(k)];
    return true;
  }
  bool ok = true;
  for (int k = 0; k < dim_; ++k) {
    const double v = drift_[static_cast<std::size_t>(k)].eval(x, t);
    mu[static_cast<std::size_t>(k)] = v;
    if (!std::isfinite(v)) ok = false;
  }
  return ok;
}

bool Problem::diffusion_factor(std::span<const double> x, double t, DiffusionFactor& out) const {
  if (const_factor_) {
    out = *const_factor_;
    return true;
  }
  if (dim_ == 1) {
    // Scalar case: any strictly negative 2D fails (the relative minor
    // tolerance is measured against |2D| itself).
    const double v = 2.0 * diffusion_[0].eval(x, t);
    if (!std::isfinite(v) || v < 0.0) return false;
    out.dim = 1;
    out.a[0] = std::sqrt(std::max(v, 0.0));
    return true;
  }
  std::array<double, kMaxDim * kMaxDim> m{};
  for (int k = 0; k < dim_; ++k) {
    for (int l = k; l < dim_; ++l) {
      const double v = 2.0 * diffusion_entry(k, l).eval(x, t);
      if (!std::isfinite(v)) return false;
      m[static_cast<std::size_t>(k * dim_ + l)] = v;
      m[static_cast<std::size_t>(l * dim_ + k)] = v;
    }
  }
  return cholesky_psd(std::span<const double>(m.data(), static_cast<std::size_t>(dim_ * dim_)),
                      dim_, out);
}

void Problem::validate(std::span<const std::pair<std::vector<double>, double>> samples) const {
  if (samples.empty()) throw std::invalid_argument("validation needs at least one sample point");
  auto check = [&](const expr::Expression& e, const std::string& name,
                   const std::vector<double>& x, double t) {
    const double v = e.eval(x, t);
    if (!std::isfinite(v)) throw ValidationError(name, x, t, "non-finite value");
  };
  for (const auto& [x, t] : samples) {
    for (int k = 0; k < dim_; ++k)
      for (int l = k; l < dim_; ++l)
        check(diffusion_entry(k, l),
              "D." + std::to_string(k + 1) + "." + std::to_string(l + 1), x, t);
    if (reaction_) check(*reaction_, "lambda", x, t);
    if (source_) check(*source_, "source", x, t);
    check(initial_, "phi", x, 0.0);
    for (const auto& [name, e] : extra_initials_) check(e, name, x, 0.0);
    for (int k = 0; k < dim_; ++k)
      check(drift_[static_cast<std::size_t>(k)], "drift." + std::to_string(k + 1), x, t);
    DiffusionFactor f;
    if (!diffusion_factor(x, t, f))
      throw ValidationError("D", x, t, "factorization of 2D failed (not positive semi-definite)");
    // Residual check of A Aᵀ = 2D.
    double scale = 0.0, resid = 0.0;
    for (int k = 0; k < dim_; ++k) {
      for (int l = k; l < dim_; ++l) {
        const double target = 2.0 * diffusion_entry(k, l).eval(x, t);
        scale = std::max(scale, std::abs(target));
        double s = 0.0;
        for (int j = 0; j <= std::min(k, l); ++j) s += f(k, j) * f(l, j);
        resid = std::max(resid, std::abs(s - target));
      }
    }
    if (resid > 1e-12 * (1.0 + scale))
      throw ValidationError("D", x, t, "factor residual " + format_double(resid) +
                                           " exceeds tolerance");
  }
}

void Problem::validate() const {
  if (sample_box_.empty())
    throw std::invalid_argument("default validation requires a sample box");
  const auto samples = halton_samples(sample_box_, horizon_, 128);
  validate(samples);
}

std::vector<std::pair<std::vector<double>, double>> halton_samples(const Box& box, double horizon,
                                                                   int count) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  auto halton = [](int index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
      f /= base;
      r += f * (index % base);
      index /= base;
    }
    return r;
  };
  std::vector<std::pair<std::vector<double>, double>> out;
  out.reserve(static_cast<std::size_t>(count));
  const int d = static_cast<int>(box.size());
  for (int i = 1; i <= count; ++i) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
      x[static_cast<std::size_t>(k)] =
          box[static_cast<std::size_t>(k)].lo +
          halton(i, primes[k]) * (box[static_cast<std::size_t>(k)].hi - box[static_cast<std::size_t>(k)].lo);
    const double t = halton(i, primes[d]) * horizon;
    out.emplace_back(std::move(x), t);
  }
  return out;
}

}  // namespace fkmc
