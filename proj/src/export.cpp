#include "platoon/export.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace platoon {

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, ptr);
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("export: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("export: write failed for '" + path + "'");
}

void append_series_rows(std::ostringstream& out, const std::vector<double>& time, int vehicle,
                        const char* name, const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << format_double(time[k]) << ',' << vehicle << ',' << name << ','
        << format_double(values[k]) << '\n';
  }
}

template <typename Int>
void append_int_rows(std::ostringstream& out, const std::vector<double>& time, int vehicle,
                     const char* name, const std::vector<Int>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << format_double(time[k]) << ',' << vehicle << ',' << name << ','
        << static_cast<long>(values[k]) << '\n';
  }
}

}  // namespace

std::string summary_text(const SimResult& result, const MoeReport& report) {
  std::ostringstream out;
  out << "seed = " << result.seed << '\n';
  out << "config_hash = " << result.config_hash << '\n';
  out << "n_followers = " << result.n_followers() << '\n';
  out << "steps = " << (result.time.empty() ? 0 : result.time.size() - 1) << '\n';
  out << "dt = " << format_double(result.dt) << '\n';
  out << "moe.mpe = " << format_double(report.mpe) << '\n';
  out << "moe.mve = " << format_double(report.mve) << '\n';
  out << "moe.ape = " << format_double(report.ape) << '\n';
  out << "moe.ave = " << format_double(report.ave) << '\n';
  for (std::size_t i = 0; i < report.peak_position_error.size(); ++i) {
    out << "peak_position_error." << (i + 1) << " = "
        << format_double(report.peak_position_error[i]) << '\n';
  }
  for (std::size_t i = 0; i < report.ratios.size(); ++i) {
    out << "string_ratio." << (i + 2) << " = "
        << (std::isfinite(report.ratios[i]) ? format_double(report.ratios[i]) : "undefined")
        << '\n';
  }
  out << "collision = " << (report.collision ? "true" : "false") << '\n';
  out << "min_gap = " << format_double(report.min_gap) << '\n';
  out << "max_abs_input = " << format_double(result.diagnostics.max_abs_input) << '\n';
  out << "string_constraint_steps = " << result.diagnostics.string_constraint_steps << '\n';
  out << "slack_active_steps = " << result.diagnostics.slack_active_steps << '\n';
  out << "terminal_slack_steps = " << result.diagnostics.terminal_slack_steps << '\n';
  out << "s_term_drop_steps = " << result.diagnostics.s_term_drop_steps << '\n';
  out << "qp_max_iteration_steps = " << result.diagnostics.qp_max_iteration_steps << '\n';
  out << "mode_switches = " << (result.mode_events.empty() ? 0 : result.mode_events.size() - 1)
      << '\n';
  return out.str();
}

void export_result(const SimResult& result, const MoeReport& report,
                   const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::runtime_error("export: cannot create directory '" + directory + "'");

  std::ostringstream run;
  run << "time,vehicle,series,value\n";
  append_series_rows(run, result.time, 0, "p", result.leader_p);
  append_series_rows(run, result.time, 0, "v", result.leader_v);
  append_series_rows(run, result.time, 0, "a", result.leader_a);
  for (int i = 0; i < result.n_followers(); ++i) {
    const FollowerSeries& series = result.followers[static_cast<std::size_t>(i)];
    const int vehicle = i + 1;
    append_series_rows(run, result.time, vehicle, "p", series.p);
    append_series_rows(run, result.time, vehicle, "v", series.v);
    append_series_rows(run, result.time, vehicle, "a", series.a);
    append_series_rows(run, result.time, vehicle, "e_p", series.e_p);
    append_series_rows(run, result.time, vehicle, "e_v", series.e_v);
    append_series_rows(run, result.time, vehicle, "e_a", series.e_a);
    append_series_rows(run, result.time, vehicle, "theta_p", series.theta_p);
    append_series_rows(run, result.time, vehicle, "theta_v", series.theta_v);
    append_series_rows(run, result.time, vehicle, "theta_a", series.theta_a);
    append_series_rows(run, result.time, vehicle, "kappa", series.kappa);
    append_series_rows(run, result.time, vehicle, "varrho", series.varrho);
    append_series_rows(run, result.time, vehicle, "u", series.u);
    append_series_rows(run, result.time, vehicle, "slack", series.slack);
    append_series_rows(run, result.time, vehicle, "band_exceedance", series.band_exceedance);
    append_series_rows(run, result.time, vehicle, "terminal_slack", series.terminal_slack);
    append_series_rows(run, result.time, vehicle, "spacing_bound", series.spacing_bound);
    append_int_rows(run, result.time, vehicle, "qp_iterations", series.qp_iterations);
    append_int_rows(run, result.time, vehicle, "bundle_age", series.bundle_age);
    append_int_rows(run, result.time, vehicle, "s_term_dropped", series.s_term_dropped);
    append_int_rows(run, result.time, vehicle, "string_rows", series.string_rows);
  }
  write_file(directory + "/run.csv", run.str());

  std::ostringstream modes;
  modes << "time,mode\n";
  for (const auto& event : result.mode_events) {
    modes << format_double(event.start) << ',' << event.mode << '\n';
  }
  write_file(directory + "/modes.csv", modes.str());

  write_file(directory + "/summary.txt", summary_text(result, report));
}

}  // namespace platoon
