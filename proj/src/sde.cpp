#include "fkmc/sde.hpp"

namespace fkmc::sde {

namespace {

// Shared update core. Backward and forward steps use the identical law;
// only the direction of time differs.
inline void step_position(ParticleState& state, const Problem& problem, double dt_actual,
                          std::span<const double> zeta) {
  const int d = problem.dimension();
  const std::span<const double> x(state.x.data(), static_cast<std::size_t>(d));

  const bool no_drift = problem.drift_is_zero();
  std::array<double, kMaxDim> mu;
  if (!no_drift &&
      !problem.drift(x, state.t, std::span<double>(mu.data(), static_cast<std::size_t>(d)))) {
    state.faulted = true;
    return;
  }
  DiffusionFactor factor;
  const DiffusionFactor* a = problem.constant_factor();
  if (a == nullptr) {
    if (!problem.diffusion_factor(x, state.t, factor)) {
      state.faulted = true;
      return;
    }
    a = &factor;
  }

  const double sdt = std::sqrt(dt_actual);
  for (int k = 0; k < d; ++k) {
    double noise = 0.0;
    for (int l = 0; l <= k; ++l) noise += (*a)(k, l) * zeta[static_cast<std::size_t>(l)];
    const double move = no_drift ? noise * sdt
                                 : mu[static_cast<std::size_t>(k)] * dt_actual + noise * sdt;
    state.x[static_cast<std::size_t>(k)] += move;
  }
}

// Rectangle-rule accumulators at the step's start state; Q uses the
// pre-update K so the weight algebra exp(J) exp(-K(t_j)) comes out exact.
inline bool accumulate(ParticleState& state, const Problem& problem, double dt_actual) {
  const int d = problem.dimension();
  const std::span<const double> x(state.x.data(), static_cast<std::size_t>(d));
  if (!problem.source_is_zero()) {
    const double s = problem.source()->eval(x, state.t);
    if (!std::isfinite(s)) return false;
    state.source_sum += std::exp(-state.reaction_integral) * s * dt_actual;
  }
  if (!problem.reaction_is_zero()) {
    const double lam = problem.reaction()->eval(x, state.t);
    if (!std::isfinite(lam)) return false;
    state.reaction_integral += lam * dt_actual;
  }
  return true;
}

}  // namespace

// Residues below this (relative to dt) merge into the final step, so a
// trajectory takes exactly ceil(T/dt) steps despite accumulated rounding in
// the time variable.
constexpr double kStepSlack = 1e-9;

void backward_step(ParticleState& state, const Problem& problem, double dt,
                   std::span<const double> zeta) {
  if (state.faulted || state.t <= 0.0) return;
  const bool last = state.t <= dt * (1.0 + kStepSlack);
  const double dt_actual = last ? state.t : dt;

  if (!accumulate(state, problem, dt_actual)) {
    state.faulted = true;
    return;
  }
  step_position(state, problem, dt_actual, zeta);
  if (state.faulted) return;
  state.t = last ? 0.0 : state.t - dt;
}

void forward_step(ParticleState& state, const Problem& problem, double dt,
                  std::span<const double> zeta) {
  const double horizon = problem.horizon();
  if (state.faulted || state.t >= horizon) return;
  const double remaining = horizon - state.t;
  const bool last = remaining <= dt * (1.0 + kStepSlack);
  const double dt_actual = last ? remaining : dt;

  step_position(state, problem, dt_actual, zeta);
  if (state.faulted) return;
  state.t = last ? horizon : state.t + dt;
}

void backward_step(ParticleState& state, const Problem& problem, double dt,
                   rng::RandomStream& stream) {
  std::array<double, kMaxDim> zeta;
  const int d = problem.dimension();
  for (int k = 0; k < d; ++k) zeta[static_cast<std::size_t>(k)] = stream.next_normal();
  backward_step(state, problem, dt, std::span<const double>(zeta.data(), static_cast<std::size_t>(d)));
}

void forward_step(ParticleState& state, const Problem& problem, double dt,
                  rng::RandomStream& stream) {
  std::array<double, kMaxDim> zeta;
  const int d = problem.dimension();
  for (int k = 0; k < d; ++k) zeta[static_cast<std::size_t>(k)] = stream.next_normal();
  forward_step(state, problem, dt, std::span<const double>(zeta.data(), static_cast<std::size_t>(d)));
}

}  // namespace fkmc::sde
