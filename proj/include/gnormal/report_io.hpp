#pragma once

// Serialisation of simulation reports, histograms and run manifests.

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gnormal/simulate.hpp"

namespace gnormal {

inline constexpr std::string_view kToolName = "gnormal";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Parameters that determine a simulation's output. The worker count is not
/// among them and is deliberately absent.
nlohmann::json config_echo(const SimulationConfig& config);

/// Fields reps, rejections, rate, ci95_lo, ci95_hi, degenerate,
/// histogram {lo, hi, bins, underflow, overflow}, runtime_seconds, config_echo.
nlohmann::json report_to_json(const SimulationReport& report, const SimulationConfig& config);

/// `bin_lo,bin_hi,count`, one row per bin.
void write_histogram_csv(const Histogram& histogram, std::ostream& out);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

/// Everything needed to re-run a subcommand: its name, the parameters, the
/// tool version and checksums of what it produced.
nlohmann::json make_manifest(std::string_view subcommand, const nlohmann::json& params,
                             const nlohmann::json& checksums);

}  // namespace gnormal
