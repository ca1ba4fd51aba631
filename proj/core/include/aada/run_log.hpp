#pragma once

#include "aada/active_loop.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace aada {

/// Wall-clock timings vary between runs, so they are left out unless asked for; without
/// them two runs of the same config and seed serialise to identical bytes.
nlohmann::json to_json(const RunLog& log, bool include_timing = false);
RunLog run_log_from_json(const nlohmann::json& j);

std::string run_log_to_string(const RunLog& log, bool include_timing = false);
void save_run_log(const RunLog& log, const std::string& path, bool include_timing = false);
RunLog load_run_log(const std::string& path);

/// Per-round timing, kept separate from the run log.
void save_timings(const RunLog& log, const std::string& path);

// ---- curve tables -------------------------------------------------------------------

inline constexpr const char* kCurveHeader = "round,n_labeled,scheme,strategy,mean_acc,sd_acc,n_seeds";

void write_curves(std::ostream& out, const std::vector<CurvePoint>& curves);
void write_curves_file(const std::string& path, const std::vector<CurvePoint>& curves);
std::vector<CurvePoint> read_curves(std::istream& in);
std::vector<CurvePoint> read_curves_file(const std::string& path);

/// Aggregates `logs` and writes the table. Throws on an empty input or on logs whose
/// configs differ in anything but scheme, strategy and seed.
std::vector<CurvePoint> emit_curves(const std::vector<RunLog>& logs, const std::string& path);

} // namespace aada
