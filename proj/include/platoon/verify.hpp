#pragma once

#include <string>
#include <vector>

#include "platoon/qp.hpp"

namespace platoon {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Property and oracle suites: "markov", "riccati", "observer", "qp", or
/// "all". Throws on unknown suite names.
std::vector<CheckResult> run_suite(const std::string& suite);

/// Deterministic random strictly convex QP with a finite box and a handful of
/// inequality rows; instance k of the cross-check batch.
QpProblem random_qp_instance(std::uint64_t seed, int index);

}  // namespace platoon
