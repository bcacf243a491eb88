#include "platoon/markov.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace platoon {

std::optional<GeneratorViolation> validate_generator(const Eigen::MatrixXd& mu, double tol) {
  if (mu.rows() != mu.cols()) throw std::invalid_argument("validate_generator: matrix must be square");
  const int n = static_cast<int>(mu.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(mu(i, j))) {
        return GeneratorViolation{i + 1, j + 1, "entry is not finite"};
      }
      if (i != j && mu(i, j) < -tol) {
        return GeneratorViolation{i + 1, j + 1, "off-diagonal rate is negative"};
      }
    }
    const double row_sum = mu.row(i).sum();
    if (std::abs(row_sum) > tol) {
      return GeneratorViolation{i + 1, i + 1,
                                "row sums to " + std::to_string(row_sum) + ", expected 0"};
    }
  }
  return std::nullopt;
}

Generator::Generator(Eigen::MatrixXd mu) : mu_(std::move(mu)) {
  if (auto violation = validate_generator(mu_)) {
    throw std::invalid_argument("Generator: invalid rate matrix at cell (" +
                                std::to_string(violation->row) + ", " +
                                std::to_string(violation->col) + "): " + violation->message);
  }
}

namespace {

// Reachability over edges with positive off-diagonal rate; transposed edges
// when `reverse` is set.
std::vector<bool> reachable_from_first(const Eigen::MatrixXd& mu, bool reverse) {
  const int n = static_cast<int>(mu.rows());
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    for (int q = 0; q < n; ++q) {
      if (q == p || seen[q]) continue;
      const double rate = reverse ? mu(q, p) : mu(p, q);
      if (rate > 0.0) {
        seen[q] = true;
        stack.push_back(q);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_ergodic(const Generator& generator) {
  const auto forward = reachable_from_first(generator.mu(), false);
  const auto backward = reachable_from_first(generator.mu(), true);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (!forward[i] || !backward[i]) return false;
  }
  return true;
}

Eigen::VectorXd invariant_distribution(const Generator& generator) {
  if (!is_ergodic(generator)) {
    throw std::invalid_argument("invariant_distribution: chain is reducible, no unique solution");
  }
  const int n = generator.n_modes();
  // pi * mu = 0  <=>  mu' * pi' = 0; replace the last balance row with the
  // normalization sum(pi) = 1.
  Eigen::MatrixXd system = generator.mu().transpose();
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("invariant_distribution: balance system is singular");
  }
  Eigen::VectorXd pi = lu.solve(rhs);
  for (int q = 0; q < n; ++q) {
    if (pi(q) < -1e-12) {
      throw std::runtime_error("invariant_distribution: negative probability mass");
    }
    pi(q) = std::max(pi(q), 0.0);
  }
  return pi;
}

int ModePath::mode_at(double t) const {
  if (segments.empty()) throw std::logic_error("ModePath::mode_at: empty path");
  int mode = segments.front().mode;
  for (const auto& segment : segments) {
    if (segment.start <= t) {
      mode = segment.mode;
    } else {
      break;
    }
  }
  return mode;
}

std::vector<int> ModePath::quantize(double t0, double dt_sub, int n_sub) const {
  std::vector<int> modes(static_cast<std::size_t>(n_sub));
  for (int k = 0; k < n_sub; ++k) {
    modes[static_cast<std::size_t>(k)] = mode_at(t0 + k * dt_sub);
  }
  return modes;
}

namespace {

double sample_holding(Rng& rng, double exit_rate, double now) {
  if (exit_rate <= 0.0) return std::numeric_limits<double>::infinity();
  return now + rng.exponential(exit_rate);
}

int sample_jump_target(Rng& rng, const Generator& generator, int from) {
  const double exit_rate = generator.exit_rate(from);
  const double u = rng.uniform01();
  double cumulative = 0.0;
  int last_positive = -1;
  for (int q = 1; q <= generator.n_modes(); ++q) {
    if (q == from) continue;
    const double rate = generator.rate(from, q);
    if (rate <= 0.0) continue;
    last_positive = q;
    cumulative += rate / exit_rate;
    if (u < cumulative) return q;
  }
  return last_positive;  // guards rounding in the cumulative sum
}

}  // namespace

ChainState::ChainState(const Generator& generator, int initial_mode, std::uint64_t seed)
    : mode(initial_mode), time(0.0), next_switch_time(0.0), rng(seed) {
  if (initial_mode < 1 || initial_mode > generator.n_modes()) {
    throw std::out_of_range("ChainState: initial mode out of range");
  }
  next_switch_time = sample_holding(rng, generator.exit_rate(mode), time);
}

ModePath advance(ChainState& state, const Generator& generator, double until) {
  if (until < state.time) throw std::invalid_argument("advance: until precedes current time");
  ModePath path;
  path.start = state.time;
  path.end = until;
  path.segments.push_back({state.time, state.mode});
  while (state.next_switch_time <= until) {
    const double switch_time = state.next_switch_time;
    state.mode = sample_jump_target(state.rng, generator, state.mode);
    state.time = switch_time;
    state.next_switch_time = sample_holding(state.rng, generator.exit_rate(state.mode), switch_time);
    path.segments.push_back({switch_time, state.mode});
  }
  state.time = until;
  return path;
}

}  // namespace platoon
