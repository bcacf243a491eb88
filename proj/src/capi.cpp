#include "platoon.h"

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "platoon/config.hpp"
#include "platoon/export.hpp"
#include "platoon/riccati.hpp"
#include "platoon/sim.hpp"
#include "platoon/verify.hpp"

using nlohmann::json;

struct platoon_sim {
  platoon::ScenarioConfig config;
  std::optional<platoon::SimResult> result;
};

namespace {

thread_local std::string g_last_error;

platoon_status fail(platoon_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

char* copy_string(const std::string& text) {
  char* out = new (std::nothrow) char[text.size() + 1];
  if (out == nullptr) return nullptr;
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

template <typename Fn>
platoon_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& error) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, error.what());
  } catch (const std::out_of_range& error) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, error.what());
  } catch (const std::runtime_error& error) {
    return fail(PLATOON_ERR_RUNTIME, error.what());
  } catch (const std::exception& error) {
    return fail(PLATOON_ERR_RUNTIME, error.what());
  }
}

json report_json(const platoon::SimResult& result) {
  const platoon::MoeReport moe = platoon::compute_moe(result);
  const auto verdicts = platoon::string_stability_check(result, result.beta);
  json j;
  j["seed"] = result.seed;
  j["config_hash"] = result.config_hash;
  j["moe"] = {{"mpe", moe.mpe}, {"mve", moe.mve}, {"ape", moe.ape}, {"ave", moe.ave}};
  j["peak_position_error"] = moe.peak_position_error;
  json ratios = json::array();
  json passes = json::array();
  for (const auto& verdict : verdicts) {
    if (verdict.defined) {
      ratios.push_back(verdict.ratio);
    } else {
      ratios.push_back(nullptr);
    }
    passes.push_back(verdict.pass);
  }
  j["string_ratios"] = ratios;
  j["string_pass"] = passes;
  j["collision"] = moe.collision;
  j["min_gap"] = moe.min_gap;
  j["diagnostics"] = {{"max_abs_input", result.diagnostics.max_abs_input},
                      {"string_constraint_steps", result.diagnostics.string_constraint_steps},
                      {"slack_active_steps", result.diagnostics.slack_active_steps},
                      {"s_term_drop_steps", result.diagnostics.s_term_drop_steps},
                      {"qp_max_iteration_steps", result.diagnostics.qp_max_iteration_steps},
                      {"mode_switches",
                       result.mode_events.empty() ? 0 : result.mode_events.size() - 1}};
  return j;
}

}  // namespace

extern "C" {

const char* platoon_version(void) { return "1.0.0"; }

const char* platoon_last_error(void) { return g_last_error.c_str(); }

void platoon_string_free(char* text) { delete[] text; }

platoon_status platoon_preset_config(const char* name, char** json_out) {
  if (name == nullptr || json_out == nullptr) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&]() {
    const platoon::ScenarioConfig config = platoon::ScenarioConfig::preset(name);
    *json_out = copy_string(config.to_json_string());
    return *json_out != nullptr ? PLATOON_OK : fail(PLATOON_ERR_RUNTIME, "allocation failed");
  });
}

int platoon_is_preset(const char* name) {
  return name != nullptr && platoon::ScenarioConfig::is_preset(name) ? 1 : 0;
}

platoon_status platoon_sim_create(const char* config_json, platoon_sim** sim_out) {
  if (config_json == nullptr || sim_out == nullptr) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&]() -> platoon_status {
    auto sim = std::make_unique<platoon_sim>();
    try {
      sim->config = platoon::ScenarioConfig::from_json_string(config_json);
    } catch (const std::invalid_argument& error) {
      return fail(PLATOON_ERR_PARSE, error.what());
    }
    *sim_out = sim.release();
    return PLATOON_OK;
  });
}

void platoon_sim_destroy(platoon_sim* sim) { delete sim; }

platoon_status platoon_sim_run(platoon_sim* sim, uint64_t seed) {
  if (sim == nullptr) return fail(PLATOON_ERR_INVALID_ARGUMENT, "null handle");
  return guarded([&]() {
    sim->result = platoon::run(sim->config, seed);
    return PLATOON_OK;
  });
}

platoon_status platoon_sim_moe(const platoon_sim* sim, double* mpe, double* mve, double* ape,
                               double* ave) {
  if (sim == nullptr) return fail(PLATOON_ERR_INVALID_ARGUMENT, "null handle");
  if (!sim->result.has_value()) return fail(PLATOON_ERR_RUNTIME, "no run available");
  return guarded([&]() {
    const platoon::MoeReport moe = platoon::compute_moe(*sim->result);
    if (mpe != nullptr) *mpe = moe.mpe;
    if (mve != nullptr) *mve = moe.mve;
    if (ape != nullptr) *ape = moe.ape;
    if (ave != nullptr) *ave = moe.ave;
    return PLATOON_OK;
  });
}

platoon_status platoon_sim_report_json(const platoon_sim* sim, char** json_out) {
  if (sim == nullptr || json_out == nullptr) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (!sim->result.has_value()) return fail(PLATOON_ERR_RUNTIME, "no run available");
  return guarded([&]() {
    *json_out = copy_string(report_json(*sim->result).dump(2));
    return *json_out != nullptr ? PLATOON_OK : fail(PLATOON_ERR_RUNTIME, "allocation failed");
  });
}

platoon_status platoon_sim_export(const platoon_sim* sim, const char* directory) {
  if (sim == nullptr || directory == nullptr) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (!sim->result.has_value()) return fail(PLATOON_ERR_RUNTIME, "no run available");
  return guarded([&]() -> platoon_status {
    try {
      const platoon::MoeReport moe = platoon::compute_moe(*sim->result);
      platoon::export_result(*sim->result, moe, directory);
    } catch (const std::runtime_error& error) {
      return fail(PLATOON_ERR_IO, error.what());
    }
    return PLATOON_OK;
  });
}

platoon_status platoon_invariant_distribution(const double* mu, int n, double* pi_out) {
  if (mu == nullptr || pi_out == nullptr || n < 1) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null matrix or non-positive size");
  }
  return guarded([&]() {
    Eigen::MatrixXd matrix(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) matrix(i, j) = mu[i * n + j];
    }
    const platoon::Generator generator(matrix);
    const Eigen::VectorXd pi = platoon::invariant_distribution(generator);
    for (int i = 0; i < n; ++i) pi_out[i] = pi(i);
    return PLATOON_OK;
  });
}

platoon_status platoon_solve_care(const double* a, const double* q, int n, double* p_out,
                                  double* residual_out, double* p_eigenvalues_out) {
  if (a == nullptr || q == nullptr || p_out == nullptr || n < 1 || n > 16) {
    return fail(PLATOON_ERR_INVALID_ARGUMENT, "null matrices or size outside 1..16");
  }
  return guarded([&]() {
    Eigen::MatrixXd a_m(n, n), q_m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a_m(i, j) = a[i * n + j];
        q_m(i, j) = q[i * n + j];
      }
    }
    const Eigen::MatrixXd p = platoon::solve_observer_care(a_m, q_m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) p_out[i * n + j] = p(i, j);
    }
    const platoon::CareReport report = platoon::verify_care(p, a_m, q_m);
    if (residual_out != nullptr) *residual_out = report.residual_fro;
    if (p_eigenvalues_out != nullptr) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
      for (int i = 0; i < n; ++i) p_eigenvalues_out[i] = eig.eigenvalues()(i);
    }
    return PLATOON_OK;
  });
}

platoon_status platoon_verify(const char* suite, int* n_failed_out, char** report_out) {
  if (suite == nullptr) return fail(PLATOON_ERR_INVALID_ARGUMENT, "null suite name");
  return guarded([&]() -> platoon_status {
    std::vector<platoon::CheckResult> results;
    try {
      results = platoon::run_suite(suite);
    } catch (const std::invalid_argument& error) {
      return fail(PLATOON_ERR_INVALID_ARGUMENT, error.what());
    }
    int failed = 0;
    std::ostringstream report;
    for (const auto& check : results) {
      if (!check.pass) failed += 1;
      report << (check.pass ? "ok   " : "FAIL ") << check.suite << '.' << check.name << ": "
             << check.detail << '\n';
    }
    if (n_failed_out != nullptr) *n_failed_out = failed;
    if (report_out != nullptr) {
      *report_out = copy_string(report.str());
      if (*report_out == nullptr) return fail(PLATOON_ERR_RUNTIME, "allocation failed");
    }
    return PLATOON_OK;
  });
}

}  // extern "C"
