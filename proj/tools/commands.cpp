#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gnormal/capacity.hpp"
#include "gnormal/gheat.hpp"
#include "gnormal/numeric_format.hpp"
#include "gnormal/report_io.hpp"
#include "gnormal/simulate.hpp"

namespace gnormal::cli {

namespace {

class UsageError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

Sided parse_sided(const std::string& s) {
    if (s == "one") return Sided::one;
    if (s == "two") return Sided::two;
    throw UsageError("--sided must be one or two, got '" + s + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << content;
    if (!out.flush()) throw UsageError("write to " + path + " failed");
}

// Two numeric columns x,phi; a non-numeric first line is taken as a header.
InitialCondition read_table(const std::string& text, const std::string& path) {
    std::vector<double> xs;
    std::vector<double> phis;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected x,phi");
        try {
            std::size_t used = 0;
            const double x = std::stod(line.substr(0, comma), &used);
            const double phi = std::stod(line.substr(comma + 1), &used);
            xs.push_back(x);
            phis.push_back(phi);
        } catch (const std::logic_error&) {
            if (xs.empty() && lineno == 1) continue;
            throw UsageError(path + ":" + std::to_string(lineno) + ": not a number");
        }
    }
    return InitialCondition::sampled(std::move(xs), std::move(phis));
}

nlohmann::json manifest_for(std::string_view subcommand, const nlohmann::json& params,
                            const nlohmann::json& checksums) {
    auto m = make_manifest(subcommand, params, checksums);
    m["seed"] = params.contains("seed") ? params["seed"] : nlohmann::json(nullptr);
    return m;
}

template <class T>
void optional_to(nlohmann::json& j, const char* key, const std::optional<T>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
void optional_from(const nlohmann::json& j, const char* key, std::optional<T>& v) {
    if (j.contains(key) && !j[key].is_null()) v = j[key].get<T>();
}

CapacityArgs capacity_from(const nlohmann::json& j) {
    CapacityArgs a;
    a.sigma_lo = j.value("sigma_lo", a.sigma_lo);
    a.sigma_hi = j.value("sigma_hi", a.sigma_hi);
    optional_from(j, "c", a.c);
    optional_from(j, "alpha", a.alpha);
    a.sided = j.value("sided", a.sided);
    a.bounds = j.value("bounds", a.bounds);
    a.pde = j.value("pde", a.pde);
    return a;
}

SolveArgs solve_from(const nlohmann::json& j) {
    SolveArgs a;
    a.ic = j.value("ic", a.ic);
    a.c = j.value("c", a.c);
    a.sigma_lo = j.value("sigma_lo", a.sigma_lo);
    a.sigma_hi = j.value("sigma_hi", a.sigma_hi);
    a.x_min = j.value("x_min", a.x_min);
    a.x_max = j.value("x_max", a.x_max);
    a.nx = j.value("nx", a.nx);
    a.t_end = j.value("t_end", a.t_end);
    a.safety = j.value("safety", a.safety);
    a.retain = j.value("retain", a.retain);
    a.out = j.value("out", a.out);
    return a;
}

ThresholdArgs threshold_from(const nlohmann::json& j) {
    ThresholdArgs a;
    a.alpha = j.value("alpha", a.alpha);
    a.sigma_lo = j.value("sigma_lo", a.sigma_lo);
    a.sigma_hi = j.value("sigma_hi", a.sigma_hi);
    a.levels = j.value("levels", a.levels);
    return a;
}

SimulateArgs simulate_from(const nlohmann::json& j) {
    SimulateArgs a;
    a.n = j.value("n", a.n);
    a.reps = j.value("reps", a.reps);
    a.policy = j.value("policy", a.policy);
    a.sigma_lo = j.value("sigma_lo", a.sigma_lo);
    a.sigma_hi = j.value("sigma_hi", a.sigma_hi);
    a.alpha = j.value("alpha", a.alpha);
    a.sided = j.value("sided", a.sided);
    a.stat = j.value("stat", a.stat);
    a.seed = j.value("seed", a.seed);
    a.critical = j.value("critical", a.critical);
    optional_from(j, "sigma", a.sigma);
    optional_from(j, "sigma_ref", a.sigma_ref);
    a.hist = j.value("hist", a.hist);
    a.no_timing = j.value("no_timing", a.no_timing);
    return a;
}

ReproArgs repro_from(const nlohmann::json& j) {
    ReproArgs a;
    a.reps = j.value("reps", a.reps);
    a.limit_reps = j.value("limit_reps", a.limit_reps);
    a.limit_n = j.value("limit_n", a.limit_n);
    a.seed = j.value("seed", a.seed);
    return a;
}

SimulationConfig build_config(const SimulateArgs& a) {
    const VolatilityBand band(a.sigma_lo, a.sigma_hi);
    if (a.n < 1) throw UsageError("--n must be >= 1");
    const Probability alpha(a.alpha);
    const auto policy = [&] {
        if (a.policy == "constant") return PolicySpec::constant(band, a.n, a.sigma.value_or(band.hi()));
        if (a.policy == "one-sided-opt") return PolicySpec::one_sided_optimal(band, a.n, alpha);
        if (a.policy == "two-sided-thresh") return PolicySpec::two_sided_threshold(band, a.n, alpha);
        if (a.policy == "heuristic-t") {
            if (a.critical != "normal" && a.critical != "t") {
                throw UsageError("--critical must be normal or t, got '" + a.critical + "'");
            }
            return PolicySpec::heuristic_t(band, a.n, alpha,
                                           a.critical == "t" ? HeuristicCritical::student_t
                                                             : HeuristicCritical::normal);
        }
        throw UsageError("unknown --policy '" + a.policy + "'");
    }();
    StatisticKind stat;
    if (a.stat == "z") {
        stat = StatisticKind::z_known_sigma;
    } else if (a.stat == "t") {
        stat = StatisticKind::t_student;
    } else {
        throw UsageError("--stat must be z or t, got '" + a.stat + "'");
    }
    SimulationConfig config{a.n,
                            a.reps,
                            policy,
                            TestSpec{parse_sided(a.sided), alpha, stat, a.sigma_ref.value_or(band.hi())},
                            NoiseKind::standard_normal,
                            a.seed,
                            a.workers};
    config.validate();
    return config;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace

// --- parameter echo --------------------------------------------------------

nlohmann::json to_params(const CapacityArgs& a) {
    nlohmann::json j{{"sigma_lo", a.sigma_lo}, {"sigma_hi", a.sigma_hi}, {"sided", a.sided},
                     {"bounds", a.bounds},     {"pde", a.pde}};
    optional_to(j, "c", a.c);
    optional_to(j, "alpha", a.alpha);
    return j;
}

nlohmann::json to_params(const SolveArgs& a) {
    return {{"ic", a.ic},         {"c", a.c},         {"sigma_lo", a.sigma_lo}, {"sigma_hi", a.sigma_hi},
            {"x_min", a.x_min},   {"x_max", a.x_max}, {"nx", a.nx},             {"t_end", a.t_end},
            {"safety", a.safety}, {"retain", a.retain}, {"out", a.out}};
}

nlohmann::json to_params(const ThresholdArgs& a) {
    return {{"alpha", a.alpha}, {"sigma_lo", a.sigma_lo}, {"sigma_hi", a.sigma_hi}, {"levels", a.levels}};
}

nlohmann::json to_params(const SimulateArgs& a) {
    nlohmann::json j{{"n", a.n},
                     {"reps", a.reps},
                     {"policy", a.policy},
                     {"sigma_lo", a.sigma_lo},
                     {"sigma_hi", a.sigma_hi},
                     {"alpha", a.alpha},
                     {"sided", a.sided},
                     {"stat", a.stat},
                     {"seed", a.seed},
                     {"critical", a.critical},
                     {"hist", a.hist},
                     {"no_timing", a.no_timing}};
    optional_to(j, "sigma", a.sigma);
    optional_to(j, "sigma_ref", a.sigma_ref);
    return j;
}

nlohmann::json to_params(const ReproArgs& a) {
    return {{"reps", a.reps}, {"limit_reps", a.limit_reps}, {"limit_n", a.limit_n}, {"seed", a.seed}};
}

// --- capacity ----------------------------------------------------------------

CommandOutput run_capacity(const CapacityArgs& a) {
    const VolatilityBand band(a.sigma_lo, a.sigma_hi);
    if (a.c.has_value() == a.alpha.has_value()) throw UsageError("give exactly one of --c and --alpha");

    nlohmann::json result{{"sigma_lo", band.lo()}, {"sigma_hi", band.hi()}};
    double c = 0.0;
    if (a.alpha) {
        const Sided sided = parse_sided(a.sided);
        const Probability alpha(*a.alpha);
        if (!(alpha.value() > 0.0 && alpha.value() < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
        c = band.hi() * norm_quantile(sided == Sided::one ? 1.0 - alpha.value() : 1.0 - 0.5 * alpha.value());
        result["alpha"] = alpha.value();
        result["sided"] = a.sided;
    } else {
        c = *a.c;
        if (!std::isfinite(c)) throw UsageError("--c must be finite");
    }
    result["c"] = c;
    result["p1"] = p1(c, band);

    if (a.bounds) {
        const TwoSidedApprox approx = p2_approx(c, band);
        result["p2_approx"] = approx.value;
        result["abs_bound"] = approx.abs_bound;
        result["rel_bound"] = approx.rel_bound;
        result["rel_bound_uniform"] = approx.rel_bound_uniform;
    } else {
        result["p2_approx"] = 2.0 * p1(c, band);
    }

    if (a.pde) {
        GridSpec grid = default_two_sided_grid(c, band);
        grid.workers = a.workers;
        const P2Numeric num = p2_numeric(c, band, grid);
        result["p2_numeric"] = {{"value", num.value},  {"gap", 2.0 * p1(c, band) - num.value},
                                {"dx", num.dx},        {"dt", num.dt},
                                {"steps", num.steps},  {"nx", num.nx},
                                {"half_width", num.half_width}};
    }

    CommandOutput output;
    output.manifest = manifest_for("capacity", to_params(a), {{"result", fnv1a64_hex(result.dump())}});
    result["manifest"] = output.manifest;
    output.out = dump(result);
    return output;
}

// --- solve -------------------------------------------------------------------

CommandOutput run_solve(const SolveArgs& a) {
    if (a.out.empty()) throw UsageError("--out is required");
    const VolatilityBand band(a.sigma_lo, a.sigma_hi);
    nlohmann::json checksums;

    std::optional<InitialCondition> ic;
    if (a.ic == "one-sided") {
        ic = InitialCondition::indicator_above(a.c);
    } else if (a.ic == "two-sided") {
        ic = InitialCondition::indicator_abs_above(a.c);
    } else if (a.ic.rfind("table:", 0) == 0) {
        const std::string path = a.ic.substr(6);
        const std::string text = read_file(path);
        checksums["table"] = fnv1a64_hex(text);
        ic = read_table(text, path);
    } else {
        throw UsageError("--ic must be one-sided, two-sided or table:<path>, got '" + a.ic + "'");
    }

    GridSpec grid;
    grid.x_min = a.x_min;
    grid.x_max = a.x_max;
    grid.nx = a.nx;
    grid.t_end = a.t_end;
    grid.safety = a.safety;
    grid.retain_levels = a.retain;
    grid.workers = a.workers;
    const GridSolution sol = solve(*ic, band, grid);

    std::ostringstream csv;
    write_csv(sol, csv);
    const std::string csv_text = csv.str();
    write_file(a.out, csv_text);
    checksums["csv"] = fnv1a64_hex(csv_text);

    const std::size_t last = sol.values.size() - 1;
    const double t = sol.times[last];
    nlohmann::json summary{{"ic", a.ic},         {"dx", sol.dx},        {"dt", sol.dt},
                           {"steps", sol.steps}, {"nx", sol.x.size()},  {"levels", sol.values.size()},
                           {"t_end", t},         {"csv", a.out}};
    if (a.x_min <= 0.0 && 0.0 <= a.x_max) summary["u_final_at_0"] = sol.value_at(last, 0.0);

    // Closed-form comparisons where they exist.
    if (t > 0.0 && band.lo() > 0.0 && (a.ic == "one-sided" || a.ic == "two-sided")) {
        double sup = 0.0;
        for (std::size_t j = 0; j < sol.x.size(); ++j) {
            double exact = 0.0;
            if (a.ic == "one-sided") {
                exact = u_one_sided({a.c, t, sol.x[j]}, band);
            } else if (band.degenerate()) {
                const double s = band.hi() * std::sqrt(t);
                exact = norm_cdf((sol.x[j] - a.c) / s) + norm_cdf((-sol.x[j] - a.c) / s);
            } else {
                continue;
            }
            sup = std::max(sup, std::abs(sol.values[last][j] - exact));
        }
        if (a.ic == "one-sided" || band.degenerate()) summary["closed_form_sup_error"] = sup;
        if (a.ic == "two-sided" && summary.contains("u_final_at_0")) {
            const double two_p1 = 2.0 * p1(a.c / std::sqrt(t), band);
            summary["two_p1"] = two_p1;
            summary["gap_at_0"] = two_p1 - summary["u_final_at_0"].get<double>();
        }
    }
    checksums["summary"] = fnv1a64_hex(summary.dump());

    CommandOutput output;
    output.manifest = manifest_for("solve", to_params(a), checksums);
    write_file(a.out + ".manifest.json", dump(output.manifest));
    summary["manifest"] = output.manifest;
    output.out = dump(summary);
    return output;
}

// --- threshold ---------------------------------------------------------------

CommandOutput run_threshold(const ThresholdArgs& a) {
    const VolatilityBand band(a.sigma_lo, a.sigma_hi);
    if (a.levels < 2) throw UsageError("--levels must be >= 2");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    const double c = band.hi() * norm_quantile(1.0 - 0.5 * a.alpha);
    GridSpec grid = default_two_sided_grid(c, band);
    grid.workers = a.workers;
    const auto table = two_sided_threshold(band, a.alpha, a.levels - 1, grid);

    std::string csv = "time_remaining,threshold,flag\n";
    for (const auto& p : table) {
        csv += shortest(p.time_remaining) + ',' + shortest(p.threshold) + ',' + to_string(p.flag) + '\n';
    }
    CommandOutput output;
    output.manifest = manifest_for("threshold", to_params(a), {{"csv", fnv1a64_hex(csv)}});
    output.out = csv;
    output.err = dump(output.manifest);
    return output;
}

// --- simulate ----------------------------------------------------------------

CommandOutput run_simulate(const SimulateArgs& a) {
    const SimulationConfig config = build_config(a);
    SimulationReport report = run(config);
    if (a.no_timing) report.runtime_seconds = 0.0;

    nlohmann::json json = report_to_json(report, config);
    nlohmann::json stable = json;
    stable.erase("runtime_seconds");
    nlohmann::json checksums{{"report", fnv1a64_hex(stable.dump())}};
    if (!a.hist.empty()) {
        std::ostringstream csv;
        write_histogram_csv(report.histogram, csv);
        write_file(a.hist, csv.str());
        checksums["hist"] = fnv1a64_hex(csv.str());
    }
    CommandOutput output;
    output.manifest = manifest_for("simulate", to_params(a), checksums);
    json["manifest"] = output.manifest;
    output.out = dump(json);
    return output;
}

// --- repro -------------------------------------------------------------------

namespace {

struct ReproRow {
    std::string check;
    double value;
    std::string target;
    bool pass;
};

SimulationReport heuristic_run(int n, std::int64_t reps, HeuristicCritical critical, std::uint64_t seed,
                               int workers) {
    const VolatilityBand band(0.8, 1.0);
    SimulationConfig config{n,
                            reps,
                            PolicySpec::heuristic_t(band, n, Probability(0.05), critical),
                            TestSpec{Sided::two, Probability(0.05), StatisticKind::t_student, 1.0},
                            NoiseKind::standard_normal,
                            seed,
                            workers};
    return run(config);
}

}  // namespace

CommandOutput run_repro(const ReproArgs& a) {
    if (a.reps < 1 || a.limit_reps < 1 || a.limit_n < 1) throw UsageError("rep counts and --limit-n must be >= 1");
    const VolatilityBand band(0.8, 1.0);
    std::vector<ReproRow> rows;

    struct P2Case {
        double q;
        double rounded;
        double scale;
        double rel_limit;
    };
    for (const P2Case& pc : {P2Case{0.95, 0.11, 100.0, 2e-3}, P2Case{0.975, 0.056, 1000.0, 4e-4},
                             P2Case{0.995, 0.011, 1000.0, 5e-6}}) {
        const auto approx = p2_approx(norm_quantile(pc.q), band);
        const std::string at = "(Phi^-1(" + shortest(pc.q) + "))";
        rows.push_back({"p2_approx" + at, approx.value, "rounds to " + shortest(pc.rounded),
                        std::abs(std::round(approx.value * pc.scale) / pc.scale - pc.rounded) < 1e-12});
        rows.push_back({"rel_bound" + at, approx.rel_bound, "< " + shortest(pc.rel_limit),
                        approx.rel_bound < pc.rel_limit});
    }

    const double tol = a.reps >= 1000000 ? 0.0020 : 0.0045;
    for (const auto& [n, reference] : {std::pair{20, 0.0565}, std::pair{200, 0.0589}}) {
        bool any_in_band = false;
        bool all_above = true;
        for (auto critical : {HeuristicCritical::normal, HeuristicCritical::student_t}) {
            const auto rep = heuristic_run(n, a.reps, critical, a.seed, a.workers);
            const bool in_band = std::abs(rep.rate - reference) <= tol;
            const bool above = wilson_interval(rep.rejections, rep.reps - rep.degenerate, 3.0).lo > 0.05;
            any_in_band = any_in_band || in_band;
            all_above = all_above && above;
            const std::string label = critical == HeuristicCritical::normal ? "normal" : "t";
            rows.push_back({"rate n=" + std::to_string(n) + " c_alpha=" + label, rep.rate,
                            shortest(reference) + " +- " + shortest(tol), in_band});
        }
        rows.push_back({"n=" + std::to_string(n) + " one in band, both > 5% (3 SD)",
                        static_cast<double>(any_in_band && all_above), "1", any_in_band && all_above});
    }

    {
        const Probability alpha(0.05);
        SimulationConfig config{a.limit_n,
                                a.limit_reps,
                                PolicySpec::one_sided_optimal(band, a.limit_n, alpha),
                                TestSpec{Sided::one, alpha, StatisticKind::z_known_sigma, band.hi()},
                                NoiseKind::standard_normal,
                                a.seed,
                                a.workers};
        const auto rep = run(config);
        const double target = 2.0 * 0.05 / (1.0 + band.lo() / band.hi());
        rows.push_back({"one-sided limit n=" + std::to_string(a.limit_n), rep.rate,
                        shortest(target) + " +- 0.004", std::abs(rep.rate - target) <= 0.004});
    }

    std::string table;
    char line[256];
    std::snprintf(line, sizeof line, "%-40s %-24s %-30s %s\n", "check", "value", "target", "result");
    table += line;
    bool all = true;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-40s %-24s %-30s %s\n", r.check.c_str(), shortest(r.value).c_str(),
                      r.target.c_str(), r.pass ? "PASS" : "FAIL");
        table += line;
        all = all && r.pass;
    }

    CommandOutput output;
    output.manifest = manifest_for("repro", to_params(a), {{"table", fnv1a64_hex(table)}});
    output.out = table;
    output.err = dump(output.manifest);
    output.exit_code = all ? kOk : kPropertyFailure;
    return output;
}

// --- replay ------------------------------------------------------------------

CommandOutput run_replay(const nlohmann::json& document, int workers) {
    const nlohmann::json& recorded = document.contains("manifest") ? document["manifest"] : document;
    if (!recorded.contains("subcommand") || !recorded.contains("params")) {
        throw UsageError("not a manifest: missing subcommand or params");
    }
    const auto sub = recorded["subcommand"].get<std::string>();
    const auto& params = recorded["params"];

    CommandOutput rerun;
    if (sub == "capacity") {
        auto a = capacity_from(params);
        a.workers = workers;
        rerun = run_capacity(a);
    } else if (sub == "solve") {
        auto a = solve_from(params);
        a.workers = workers;
        rerun = run_solve(a);
    } else if (sub == "threshold") {
        auto a = threshold_from(params);
        a.workers = workers;
        rerun = run_threshold(a);
    } else if (sub == "simulate") {
        auto a = simulate_from(params);
        a.workers = workers;
        rerun = run_simulate(a);
    } else if (sub == "repro") {
        auto a = repro_from(params);
        a.workers = workers;
        rerun = run_repro(a);
    } else {
        throw UsageError("cannot replay subcommand '" + sub + "'");
    }

    const bool match = rerun.manifest["checksums"] == recorded.value("checksums", nlohmann::json::object());
    nlohmann::json result{{"subcommand", sub},
                          {"match", match},
                          {"recorded_version", recorded.value("version", "")},
                          {"expected", recorded.value("checksums", nlohmann::json::object())},
                          {"actual", rerun.manifest["checksums"]}};
    CommandOutput output;
    output.manifest = rerun.manifest;
    output.out = dump(result);
    output.exit_code = match ? kOk : kPropertyFailure;
    return output;
}

}  // namespace gnormal::cli
