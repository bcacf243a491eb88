// Command-line front end over the shared-library C interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "platoon.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

using nlohmann::json;

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { platoon_string_free(value); }
};

int report_error(platoon_status status) {
  std::cerr << "error: " << platoon_last_error() << "\n";
  switch (status) {
    case PLATOON_ERR_INVALID_ARGUMENT:
    case PLATOON_ERR_PARSE:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

bool read_file(const std::string& path, std::string& content) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  content = buffer.str();
  return true;
}

/// --config accepts either a preset name or a path to a JSON document.
int load_config_text(const std::string& config_arg, std::string& text) {
  if (platoon_is_preset(config_arg.c_str()) != 0) {
    OwnedString preset;
    const platoon_status status = platoon_preset_config(config_arg.c_str(), &preset.value);
    if (status != PLATOON_OK) return report_error(status);
    text = preset.value;
    return kExitOk;
  }
  if (!read_file(config_arg, text)) {
    std::cerr << "error: cannot read config '" << config_arg << "' (not a preset, not a file)\n";
    return kExitUsage;
  }
  return kExitOk;
}

/// Square matrix from a JSON file holding an array of rows.
int load_matrix(const std::string& path, std::vector<double>& flat, int& n) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read matrix file '" << path << "'\n";
    return kExitUsage;
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& error) {
    std::cerr << "error: " << path << ": " << error.what() << "\n";
    return kExitUsage;
  }
  if (!j.is_array() || j.empty()) {
    std::cerr << "error: " << path << ": expected a JSON array of rows\n";
    return kExitUsage;
  }
  n = static_cast<int>(j.size());
  flat.clear();
  for (int i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      std::cerr << "error: " << path << ": row " << (i + 1) << " must hold " << n << " numbers\n";
      return kExitUsage;
    }
    for (int c = 0; c < n; ++c) {
      const json& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) {
        std::cerr << "error: " << path << ": cell (" << (i + 1) << ", " << (c + 1)
                  << ") is not a number\n";
        return kExitUsage;
      }
      flat.push_back(cell.get<double>());
    }
  }
  return kExitOk;
}

bool output_collision(const std::string& directory) {
  namespace fs = std::filesystem;
  for (const char* name : {"run.csv", "modes.csv", "summary.txt"}) {
    if (fs::exists(fs::path(directory) / name)) return true;
  }
  return false;
}

void print_moe_table(double mpe, double mve, double ape, double ave) {
  std::cout << "MPE [m]   MVE [m/s]  APE [m]   AVE [m/s]\n";
  std::cout << mpe << "  " << mve << "  " << ape << "  " << ave << "\n";
}

int command_run(const std::string& config_arg, std::uint64_t seed, const std::string& out_dir,
                bool force) {
  std::string config_text;
  const int load_status = load_config_text(config_arg, config_text);
  if (load_status != kExitOk) return load_status;

  if (!out_dir.empty() && !force && output_collision(out_dir)) {
    std::cerr << "error: output directory '" << out_dir
              << "' already holds run files; pass --force to overwrite\n";
    return kExitRuntime;
  }

  platoon_sim* sim = nullptr;
  platoon_status status = platoon_sim_create(config_text.c_str(), &sim);
  if (status != PLATOON_OK) return report_error(status);

  status = platoon_sim_run(sim, seed);
  if (status != PLATOON_OK) {
    const int code = report_error(status);
    platoon_sim_destroy(sim);
    return code;
  }

  double mpe = 0, mve = 0, ape = 0, ave = 0;
  status = platoon_sim_moe(sim, &mpe, &mve, &ape, &ave);
  if (status != PLATOON_OK) {
    const int code = report_error(status);
    platoon_sim_destroy(sim);
    return code;
  }

  if (!out_dir.empty()) {
    status = platoon_sim_export(sim, out_dir.c_str());
    if (status != PLATOON_OK) {
      const int code = report_error(status);
      platoon_sim_destroy(sim);
      return code;
    }
  }

  OwnedString report;
  if (platoon_sim_report_json(sim, &report.value) == PLATOON_OK) {
    const json j = json::parse(report.value);
    print_moe_table(mpe, mve, ape, ave);
    std::cout << "collision = " << (j["collision"].get<bool>() ? "true" : "false") << "\n";
    std::cout << "string_ratios =";
    for (const auto& ratio : j["string_ratios"]) {
      if (ratio.is_null()) {
        std::cout << " undefined";
      } else {
        std::cout << " " << ratio.get<double>();
      }
    }
    std::cout << "\n";
  } else {
    print_moe_table(mpe, mve, ape, ave);
  }
  if (!out_dir.empty()) std::cout << "exported to " << out_dir << "\n";
  platoon_sim_destroy(sim);
  return kExitOk;
}

int command_sweep(const std::string& config_arg, int seeds, const std::string& out_dir,
                  bool force) {
  std::string config_text;
  const int load_status = load_config_text(config_arg, config_text);
  if (load_status != kExitOk) return load_status;

  platoon_sim* sim = nullptr;
  platoon_status status = platoon_sim_create(config_text.c_str(), &sim);
  if (status != PLATOON_OK) return report_error(status);

  std::vector<double> mpes, mves, apes, aves;
  int string_pass_runs = 0;
  int failures = 0;
  std::ostringstream lines;
  for (int seed = 1; seed <= seeds; ++seed) {
    status = platoon_sim_run(sim, static_cast<std::uint64_t>(seed));
    if (status != PLATOON_OK) {
      failures += 1;
      lines << "seed " << seed << " FAILED: " << platoon_last_error() << "\n";
      continue;
    }
    double mpe = 0, mve = 0, ape = 0, ave = 0;
    platoon_sim_moe(sim, &mpe, &mve, &ape, &ave);
    mpes.push_back(mpe);
    mves.push_back(mve);
    apes.push_back(ape);
    aves.push_back(ave);

    bool all_pass = true;
    OwnedString report;
    if (platoon_sim_report_json(sim, &report.value) == PLATOON_OK) {
      const json j = json::parse(report.value);
      for (const auto& pass : j["string_pass"]) {
        if (!pass.get<bool>()) all_pass = false;
      }
      if (j["collision"].get<bool>()) all_pass = false;
    }
    if (all_pass) string_pass_runs += 1;

    if (!out_dir.empty()) {
      const std::string seed_dir = out_dir + "/seed-" + std::to_string(seed);
      if (!force && output_collision(seed_dir)) {
        failures += 1;
        lines << "seed " << seed << " FAILED: output collision in " << seed_dir << "\n";
        continue;
      }
      if (platoon_sim_export(sim, seed_dir.c_str()) != PLATOON_OK) {
        failures += 1;
        lines << "seed " << seed << " FAILED: " << platoon_last_error() << "\n";
        continue;
      }
    }
    lines << "seed " << seed << " mpe " << mpe << " mve " << mve << " ape " << ape << " ave "
          << ave << (all_pass ? " string-stable" : " string-UNSTABLE") << "\n";
  }
  platoon_sim_destroy(sim);

  const auto aggregate = [](std::vector<double> values, std::ostream& out, const char* name) {
    if (values.empty()) return;
    std::sort(values.begin(), values.end());
    const double median = values.size() % 2 == 1
                              ? values[values.size() / 2]
                              : 0.5 * (values[values.size() / 2 - 1] + values[values.size() / 2]);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    out << name << ".median = " << median << "\n" << name << ".mean = " << mean << "\n";
  };

  std::ostringstream summary;
  summary << lines.str();
  aggregate(mpes, summary, "mpe");
  aggregate(mves, summary, "mve");
  aggregate(apes, summary, "ape");
  aggregate(aves, summary, "ave");
  const int completed = seeds - failures;
  summary << "runs = " << seeds << "\ncompleted = " << completed << "\n";
  if (completed > 0) {
    summary << "string_stable_fraction = "
            << static_cast<double>(string_pass_runs) / completed << "\n";
  }
  std::cout << summary.str();
  if (!out_dir.empty()) {
    std::ofstream out(out_dir + "/sweep_summary.txt", std::ios::binary | std::ios::trunc);
    if (out) out << summary.str();
  }
  return failures == 0 ? kExitOk : kExitRuntime;
}

int command_verify(const std::string& suite) {
  int failed = 0;
  OwnedString report;
  const platoon_status status = platoon_verify(suite.c_str(), &failed, &report.value);
  if (status != PLATOON_OK) return report_error(status);
  std::cout << report.value;
  std::cout << (failed == 0 ? "all properties hold" : "failures: " + std::to_string(failed))
            << "\n";
  return failed == 0 ? kExitOk : kExitRuntime;
}

int command_invariant(const std::string& mu_file) {
  std::vector<double> mu;
  int n = 0;
  if (mu_file.empty()) {
    // Scenario default: pull mu out of the preset document.
    OwnedString preset;
    if (platoon_preset_config("paper-iv", &preset.value) != PLATOON_OK) {
      return report_error(PLATOON_ERR_RUNTIME);
    }
    const json j = json::parse(preset.value);
    n = static_cast<int>(j["mu"].size());
    for (const auto& row : j["mu"]) {
      for (const auto& cell : row) mu.push_back(cell.get<double>());
    }
  } else {
    const int load_status = load_matrix(mu_file, mu, n);
    if (load_status != kExitOk) return load_status;
  }

  std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
  const platoon_status status = platoon_invariant_distribution(mu.data(), n, pi.data());
  if (status != PLATOON_OK) return report_error(status);

  std::cout << "pi =";
  for (double value : pi) std::cout << " " << value;
  std::cout << "\n";
  double residual = 0.0;
  for (int q = 0; q < n; ++q) {
    double column = 0.0;
    for (int p = 0; p < n; ++p) column += pi[static_cast<std::size_t>(p)] * mu[static_cast<std::size_t>(p * n + q)];
    residual = std::max(residual, std::abs(column));
  }
  std::cout << "balance_residual = " << residual << "\n";
  return kExitOk;
}

int command_care(const std::string& q_file) {
  int n = 3;
  std::vector<double> q;
  if (q_file.empty()) {
    q = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  } else {
    const int load_status = load_matrix(q_file, q, n);
    if (load_status != kExitOk) return load_status;
  }
  // Drift of the triple-integrator chain.
  std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i + 1 < n; ++i) a[static_cast<std::size_t>(i * n + i + 1)] = 1.0;

  std::vector<double> p(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  std::vector<double> eigenvalues(static_cast<std::size_t>(n), 0.0);
  double residual = 0.0;
  const platoon_status status =
      platoon_solve_care(a.data(), q.data(), n, p.data(), &residual, eigenvalues.data());
  if (status != PLATOON_OK) return report_error(status);

  std::cout << "P =\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::cout << (j == 0 ? "" : " ") << p[static_cast<std::size_t>(i * n + j)];
    }
    std::cout << "\n";
  }
  std::cout << "residual = " << residual << "\n";
  std::cout << "eigenvalues =";
  for (double value : eigenvalues) std::cout << " " << value;
  std::cout << "\n";
  return kExitOk;
}

int command_config(const std::string& preset) {
  OwnedString text;
  const platoon_status status = platoon_preset_config(preset.c_str(), &text.value);
  if (status != PLATOON_OK) return report_error(status);
  std::cout << text.value << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle-platoon simulator: observer-based distributed MPC under a Markovian "
               "switching communication topology"};
  app.require_subcommand(1);

  std::string run_config;
  std::uint64_t run_seed = 1;
  std::string run_out;
  bool run_force = false;
  auto* run_cmd = app.add_subcommand("run", "Run one seeded scenario and print its measures");
  run_cmd->add_option("--config", run_config, "Preset name or path to a scenario JSON file")
      ->required();
  run_cmd->add_option("--seed", run_seed, "Random seed for the switching process");
  run_cmd->add_option("--out", run_out, "Output directory for run.csv, modes.csv, summary.txt");
  run_cmd->add_flag("--force", run_force, "Overwrite existing output files");

  std::string sweep_config;
  int sweep_seeds = 0;
  std::string sweep_out;
  bool sweep_force = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run seeds 1..K and aggregate the measures");
  sweep_cmd->add_option("--config", sweep_config, "Preset name or path to a scenario JSON file")
      ->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds (>= 1)")->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory (per-seed subdirectories)");
  sweep_cmd->add_flag("--force", sweep_force, "Overwrite existing output files");

  std::string verify_suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "Run the property and oracle suites");
  verify_cmd->add_option("--suite", verify_suite, "observer|markov|riccati|qp|all");

  std::string invariant_mu;
  auto* invariant_cmd =
      app.add_subcommand("invariant", "Invariant distribution of a transition-rate matrix");
  invariant_cmd->add_option("--mu", invariant_mu,
                            "JSON file with the rate matrix (default: scenario matrix)");

  std::string care_q;
  auto* care_cmd = app.add_subcommand("care", "Solve the observer design equation");
  care_cmd->add_option("--q", care_q, "JSON file with the positive-definite Q (default: identity)");

  std::string config_preset = "paper-iv";
  auto* config_cmd = app.add_subcommand("config", "Print a full preset configuration");
  config_cmd->add_option("--preset", config_preset, "Preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    if (error.get_exit_code() == 0) {
      app.exit(error);
      return kExitOk;
    }
    app.exit(error);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return command_run(run_config, run_seed, run_out, run_force);
    if (sweep_cmd->parsed()) {
      if (sweep_seeds < 1) {
        std::cerr << "error: --seeds must be >= 1\n";
        return kExitUsage;
      }
      return command_sweep(sweep_config, sweep_seeds, sweep_out, sweep_force);
    }
    if (verify_cmd->parsed()) return command_verify(verify_suite);
    if (invariant_cmd->parsed()) return command_invariant(invariant_mu);
    if (care_cmd->parsed()) return command_care(care_q);
    if (config_cmd->parsed()) return command_config(config_preset);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
