#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "platoon/rng.hpp"

namespace platoon {

/// First invariant violation found in a transition-rate matrix.
struct GeneratorViolation {
  int row = 0;  // 1-based
  int col = 0;  // 1-based
  std::string message;
};

/// Checks off-diagonal entries >= 0 and zero row sums. Returns the first
/// violated cell, or nullopt when the matrix is a valid generator. Throws on
/// a non-square input.
std::optional<GeneratorViolation> validate_generator(const Eigen::MatrixXd& mu,
                                                     double tol = 1e-9);

/// Validated transition-rate matrix of a continuous-time Markov chain over
/// switching modes 1..n. Immutable and shareable.
class Generator {
 public:
  explicit Generator(Eigen::MatrixXd mu);

  int n_modes() const { return static_cast<int>(mu_.rows()); }
  const Eigen::MatrixXd& mu() const { return mu_; }
  double rate(int from, int to) const { return mu_(from - 1, to - 1); }
  double exit_rate(int mode) const { return -mu_(mode - 1, mode - 1); }

 private:
  Eigen::MatrixXd mu_;
};

/// True when the directed graph of positive off-diagonal rates is strongly
/// connected (sufficient for ergodicity of a finite chain).
bool is_ergodic(const Generator& generator);

/// Unique invariant distribution pi with pi * mu = 0 and sum(pi) = 1, solved
/// as a linear system with the normalization row replacing one balance row.
/// Throws when the chain is reducible.
Eigen::VectorXd invariant_distribution(const Generator& generator);

struct ModeSegment {
  double start = 0.0;
  int mode = 1;
};

/// Piecewise-constant, right-continuous mode path over [start, end].
struct ModePath {
  double start = 0.0;
  double end = 0.0;
  std::vector<ModeSegment> segments;

  int mode_at(double t) const;

  /// Mode per integration sub-step [t0 + k*dt_sub, t0 + (k+1)*dt_sub): a mode
  /// switch takes effect at the first sub-step boundary at or after the event.
  std::vector<int> quantize(double t0, double dt_sub, int n_sub) const;
};

/// Chain position plus its private random stream. Single-owner mutable.
/// Draw order: a holding time is drawn on entering a mode; the jump target is
/// drawn when that holding time expires.
struct ChainState {
  int mode = 1;
  double time = 0.0;
  double next_switch_time = 0.0;
  Rng rng;

  ChainState(const Generator& generator, int initial_mode, std::uint64_t seed);
};

/// Advances the chain to `until`, sampling exponential holding times with
/// rate -mu_pp and jump targets with probability mu_pq / (-mu_pp). A state
/// with zero exit rate is absorbing. Returns the exact event path over
/// [state.time, until].
ModePath advance(ChainState& state, const Generator& generator, double until);

}  // namespace platoon
