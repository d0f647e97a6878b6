#pragma once

#include <array>
#include <cmath>
#include <span>

#include "fkmc/problem.hpp"
#include "fkmc/rng.hpp"

namespace fkmc::sde {

/// One trajectory: position, current time, and the Feynman-Kac accumulators
///   K = integral of lambda from t to T along the path (built backward),
///   Q = sum of exp(-K(t_j)) S(X(t_j), t_j) dt_j (rectangle rule).
struct ParticleState {
  std::array<double, kMaxDim> x{};
  double t = 0.0;
  double reaction_integral = 0.0;  // K; 0 at launch (t = T)
  double source_sum = 0.0;         // Q; 0 at launch
  bool faulted = false;
};

inline ParticleState launch(std::span<const double> x0, double horizon) {
  ParticleState s;
  for (std::size_t k = 0; k < x0.size(); ++k) s.x[k] = x0[k];
  s.t = horizon;
  return s;
}

/// One backward Euler-Maruyama step:
///   X(t - dt) = X(t) + mu(X,t) dt + A(X,t) zeta sqrt(dt),
/// with dt clipped to land exactly on t = 0. lambda and S are evaluated at
/// the step's start state, before the move. zeta must hold d fresh
/// independent standard normals. Faults (non-finite coefficient,
/// factorization failure) set the fault flag and freeze the state.
void backward_step(ParticleState& state, const Problem& problem, double dt,
                   std::span<const double> zeta);

/// Forward counterpart: t advances, clipped to land exactly on t = horizon.
/// Same update law; the accumulators are not used.
void forward_step(ParticleState& state, const Problem& problem, double dt,
                  std::span<const double> zeta);

/// Convenience overloads drawing zeta from the stream (d draws per step).
void backward_step(ParticleState& state, const Problem& problem, double dt,
                   rng::RandomStream& stream);
void forward_step(ParticleState& state, const Problem& problem, double dt,
                  rng::RandomStream& stream);

}  // namespace fkmc::sde
