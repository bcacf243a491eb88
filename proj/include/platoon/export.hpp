#pragma once

#include <string>

#include "platoon/sim.hpp"

namespace platoon {

/// Shortest round-trip decimal form; byte-stable for a given double.
std::string format_double(double value);

/// Plain-text summary (key = value lines) of one run.
std::string summary_text(const SimResult& result, const MoeReport& report);

/// Writes run.csv, modes.csv, and summary.txt into `directory` (created when
/// missing). Outputs are byte-identical for identical inputs. I/O failures
/// surface as exceptions naming the path.
void export_result(const SimResult& result, const MoeReport& report, const std::string& directory);

}  // namespace platoon
