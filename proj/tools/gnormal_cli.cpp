// gnormal: tail capacities of the G-normal distribution, the G-heat solver
// and the variance-control Monte Carlo experiments from one command line.
//
// JSON (or CSV) goes to stdout, diagnostics to stderr. Exit codes: 0 ok,
// 2 usage, 3 numerical failure, 4 a check failed.

#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"
#include "gnormal/gheat.hpp"
#include "gnormal/report_io.hpp"

using namespace gnormal::cli;

namespace {

int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void add_band(CLI::App* sub, double& lo, double& hi) {
    sub->add_option("--sigma-lo", lo, "lower volatility")->required();
    sub->add_option("--sigma-hi", hi, "upper volatility")->required();
}

void add_workers(CLI::App* sub, int& workers) {
    sub->add_option("--workers", workers, "worker threads (does not change results)")
        ->envname("GNORMAL_WORKERS")
        ->check(CLI::PositiveNumber);
}

int emit(const CommandOutput& output) {
    std::cout << output.out << std::flush;
    if (!output.err.empty()) std::cerr << output.err;
    return output.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"G-normal tail capacities, G-heat solver and variance-control simulations"};
    app.set_version_flag("--version", std::string(gnormal::kToolVersion));
    app.require_subcommand(1);

    const int workers_default = default_workers();

    CapacityArgs cap;
    cap.workers = workers_default;
    auto* cap_cmd = app.add_subcommand("capacity", "one- and two-sided tail capacities");
    add_band(cap_cmd, cap.sigma_lo, cap.sigma_hi);
    auto* c_opt = cap_cmd->add_option("--c", cap.c, "threshold c");
    cap_cmd->add_option("--alpha", cap.alpha, "derive c from a test level")->excludes(c_opt);
    cap_cmd->add_option("--sided", cap.sided, "one or two (with --alpha)")->check(CLI::IsMember({"one", "two"}));
    cap_cmd->add_flag("--bounds", cap.bounds, "report error bounds (needs c > sigma_hi/2)");
    cap_cmd->add_flag("--pde", cap.pde, "also solve the G-heat equation for p2");
    add_workers(cap_cmd, cap.workers);

    SolveArgs sol;
    sol.workers = workers_default;
    auto* sol_cmd = app.add_subcommand("solve", "solve the G-heat equation on a grid");
    sol_cmd->add_option("--ic", sol.ic, "one-sided | two-sided | table:<path>");
    sol_cmd->add_option("--c", sol.c, "indicator threshold");
    add_band(sol_cmd, sol.sigma_lo, sol.sigma_hi);
    sol_cmd->add_option("--x-min", sol.x_min);
    sol_cmd->add_option("--x-max", sol.x_max);
    sol_cmd->add_option("--nx", sol.nx, "grid nodes");
    sol_cmd->add_option("--t-end", sol.t_end);
    sol_cmd->add_option("--safety", sol.safety, "sigma_hi^2 dt / dx^2, in (0, 1]");
    sol_cmd->add_option("--retain", sol.retain, "time levels written (0 = automatic)");
    sol_cmd->add_option("--out", sol.out, "CSV path; the manifest goes to <out>.manifest.json")->required();
    add_workers(sol_cmd, sol.workers);

    ThresholdArgs thr;
    thr.workers = workers_default;
    auto* thr_cmd = app.add_subcommand("threshold", "switching thresholds of the two-sided optimal policy");
    thr_cmd->add_option("--alpha", thr.alpha)->required();
    add_band(thr_cmd, thr.sigma_lo, thr.sigma_hi);
    thr_cmd->add_option("--levels", thr.levels, "rows, evenly spaced in time_remaining over [0, 1]");
    add_workers(thr_cmd, thr.workers);

    SimulateArgs sim;
    sim.workers = workers_default;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rejection rates under a variance policy");
    sim_cmd->add_option("--n", sim.n)->required();
    sim_cmd->add_option("--reps", sim.reps);
    sim_cmd->add_option("--policy", sim.policy)
        ->check(CLI::IsMember({"constant", "one-sided-opt", "two-sided-thresh", "heuristic-t"}));
    add_band(sim_cmd, sim.sigma_lo, sim.sigma_hi);
    sim_cmd->add_option("--alpha", sim.alpha);
    sim_cmd->add_option("--sided", sim.sided)->check(CLI::IsMember({"one", "two"}));
    sim_cmd->add_option("--stat", sim.stat)->check(CLI::IsMember({"z", "t"}));
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_option("--critical", sim.critical, "heuristic-t c_alpha: normal or t")
        ->check(CLI::IsMember({"normal", "t"}));
    sim_cmd->add_option("--sigma", sim.sigma, "constant policy volatility (default sigma_hi)");
    sim_cmd->add_option("--sigma-ref", sim.sigma_ref, "z statistic scale (default sigma_hi)");
    sim_cmd->add_option("--hist", sim.hist, "write the statistic histogram as CSV");
    sim_cmd->add_flag("--no-timing", sim.no_timing, "report runtime_seconds as 0");
    add_workers(sim_cmd, sim.workers);

    ReproArgs rep;
    rep.workers = workers_default;
    auto* rep_cmd = app.add_subcommand("repro", "recompute the reference figures and print a pass/fail table");
    rep_cmd->add_option("--reps", rep.reps, "replications for the heuristic experiments");
    rep_cmd->add_option("--limit-reps", rep.limit_reps, "replications for the one-sided limit");
    rep_cmd->add_option("--limit-n", rep.limit_n, "sample size for the one-sided limit");
    rep_cmd->add_option("--seed", rep.seed);
    add_workers(rep_cmd, rep.workers);

    std::string manifest_path;
    int replay_workers = workers_default;
    auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare output checksums");
    replay_cmd->add_option("manifest", manifest_path, "manifest JSON (or a JSON output carrying one)")
        ->required()
        ->check(CLI::ExistingFile);
    add_workers(replay_cmd, replay_workers);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*cap_cmd) return emit(run_capacity(cap));
        if (*sol_cmd) return emit(run_solve(sol));
        if (*thr_cmd) return emit(run_threshold(thr));
        if (*sim_cmd) return emit(run_simulate(sim));
        if (*rep_cmd) return emit(run_repro(rep));
        if (*replay_cmd) {
            std::ifstream in(manifest_path);
            return emit(run_replay(nlohmann::json::parse(in), replay_workers));
        }
    } catch (const gnormal::NumericalFailure& e) {
        std::cerr << "gnormal: numerical failure at step " << e.step() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "gnormal: bad JSON input: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "gnormal: " << e.what() << '\n';
        return kUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "gnormal: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "gnormal: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}
