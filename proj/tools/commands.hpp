#pragma once

// Subcommands of the gnormal tool. Each takes a plain argument struct (what
// the command line binds to, and what the manifest echoes) and returns the
// text for stdout/stderr plus the manifest, so that `replay` can re-run a
// manifest in-process and compare checksums.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace gnormal::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kPropertyFailure = 4 };

struct CommandOutput {
    std::string out;
    std::string err;
    nlohmann::json manifest;
    int exit_code = kOk;
};

struct CapacityArgs {
    double sigma_lo = 0.0;
    double sigma_hi = 1.0;
    std::optional<double> c;
    std::optional<double> alpha;
    std::string sided = "two";
    bool bounds = false;
    bool pde = false;
    int workers = 1;  // not echoed: results do not depend on it
};

struct SolveArgs {
    std::string ic = "one-sided";
    double c = 0.0;
    double sigma_lo = 0.0;
    double sigma_hi = 1.0;
    double x_min = -10.0;
    double x_max = 10.0;
    int nx = 2001;
    double t_end = 1.0;
    double safety = 0.9;
    int retain = 0;
    std::string out;
    int workers = 1;
};

struct ThresholdArgs {
    double alpha = 0.05;
    double sigma_lo = 0.0;
    double sigma_hi = 1.0;
    int levels = 11;
    int workers = 1;
};

struct SimulateArgs {
    int n = 20;
    std::int64_t reps = 1000;
    std::string policy = "heuristic-t";
    double sigma_lo = 0.0;
    double sigma_hi = 1.0;
    double alpha = 0.05;
    std::string sided = "two";
    std::string stat = "t";
    std::uint64_t seed = 1;
    std::string critical = "normal";
    std::optional<double> sigma;
    std::optional<double> sigma_ref;
    std::string hist;
    bool no_timing = false;
    int workers = 1;
};

struct ReproArgs {
    std::int64_t reps = 1000000;
    std::int64_t limit_reps = 100000;
    int limit_n = 10000;
    std::uint64_t seed = 1;
    int workers = 1;
};

nlohmann::json to_params(const CapacityArgs& a);
nlohmann::json to_params(const SolveArgs& a);
nlohmann::json to_params(const ThresholdArgs& a);
nlohmann::json to_params(const SimulateArgs& a);
nlohmann::json to_params(const ReproArgs& a);

CommandOutput run_capacity(const CapacityArgs& args);
CommandOutput run_solve(const SolveArgs& args);
CommandOutput run_threshold(const ThresholdArgs& args);
CommandOutput run_simulate(const SimulateArgs& args);
CommandOutput run_repro(const ReproArgs& args);

/// Re-runs the command recorded in a manifest (or in a JSON document that
/// carries one under "manifest") and compares output checksums.
CommandOutput run_replay(const nlohmann::json& document, int workers);

}  // namespace gnormal::cli
