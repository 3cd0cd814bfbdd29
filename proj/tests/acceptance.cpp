// Acceptance suite: one PASS/FAIL line per criterion, full-scale runs.
// Exits 1 when any criterion fails.

#include <algorithm>
#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "gnormal/capacity.hpp"
#include "gnormal/gheat.hpp"
#include "gnormal/policy.hpp"
#include "gnormal/simulate.hpp"

using namespace gnormal;

namespace {

const VolatilityBand kBand{0.8, 1.0};
constexpr double kZ999 = 3.2905267314919255;

int workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[1024];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// Kept between criteria 5 and 6, which look at the same n = 200 run.
SimulationReport g_heuristic_200_normal;

SimulationReport heuristic(int n, HeuristicCritical critical, std::int64_t reps) {
    SimulationConfig config{n,
                            reps,
                            PolicySpec::heuristic_t(kBand, n, Probability(0.05), critical),
                            TestSpec{Sided::two, Probability(0.05), StatisticKind::t_student, 1.0},
                            NoiseKind::standard_normal,
                            1,
                            workers()};
    return run(config);
}

Outcome criterion_1() {
    struct Case {
        double q;
        double rounded;
        double scale;
        double rel_limit;
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : {Case{0.95, 0.11, 100.0, 2e-3}, Case{0.975, 0.056, 1000.0, 4e-4},
                          Case{0.995, 0.011, 1000.0, 5e-6}}) {
        const auto a = p2_approx(norm_quantile(c.q), kBand);
        const bool rounds = std::abs(std::round(a.value * c.scale) / c.scale - c.rounded) < 1e-12;
        const bool bounded = a.rel_bound < c.rel_limit;
        ok = ok && rounds && bounded;
        detail += fmt("q=%.3f p2=%.6f rel=%.3g (<%g; uniform %.3g) ", c.q, a.value, a.rel_bound, c.rel_limit,
                      a.rel_bound_uniform);
    }
    return {ok, detail};
}

Outcome criterion_2() {
    std::vector<double> errors;
    for (int nx : {2001, 4001, 8001}) {
        GridSpec grid;
        grid.nx = nx;
        grid.retain_levels = 2;
        grid.workers = workers();
        const auto sol = solve(InitialCondition::indicator_above(0.0), kBand, grid);
        double sup = 0.0;
        for (std::size_t j = 0; j < sol.x.size(); ++j) {
            sup = std::max(sup, std::abs(sol.values.back()[j] - u_one_sided({0.0, 1.0, sol.x[j]}, kBand)));
        }
        errors.push_back(sup);
    }
    const double r1 = errors[0] / errors[1];
    const double r2 = errors[1] / errors[2];
    return {errors[0] <= 5e-3 && r1 >= 1.7 && r2 >= 1.7,
            fmt("sup errors %.3e %.3e %.3e, ratios %.2f %.2f", errors[0], errors[1], errors[2], r1, r2)};
}

Outcome criterion_3() {
    bool ok = true;
    std::string detail;
    for (double c : {1.0, 1.5, 2.0}) {
        GridSpec grid = default_two_sided_grid(c, kBand);
        grid.workers = workers();
        const auto rep = verify_sandwich(c, kBand, grid);
        ok = ok && rep.holds;
        detail += fmt("c=%.1f lower=%.2e upper_slack=%.2e eps=%.2e; ", c, rep.max_lower_violation,
                      rep.min_upper_slack, rep.epsilon_grid);
    }
    return {ok, detail};
}

Outcome criterion_4() {
    const int n = 10000;
    const Probability alpha(0.05);
    SimulationConfig config{n,
                            100000,
                            PolicySpec::one_sided_optimal(kBand, n, alpha),
                            TestSpec{Sided::one, alpha, StatisticKind::z_known_sigma, kBand.hi()},
                            NoiseKind::standard_normal,
                            1,
                            workers()};
    const auto rep = run(config);
    const double target = 2.0 * 0.05 / (1.0 + kBand.lo() / kBand.hi());
    return {std::abs(rep.rate - target) <= 0.004, fmt("rate %.5f, target %.5f +- 0.004", rep.rate, target)};
}

Outcome criterion_5() {
    const std::int64_t reps = 1000000;
    const double tol = 0.0020;
    bool ok = true;
    std::string detail;
    for (const auto& [n, reference] : {std::pair{20, 0.0565}, std::pair{200, 0.0589}}) {
        bool any_in_band = false;
        bool all_above = true;
        for (auto critical : {HeuristicCritical::normal, HeuristicCritical::student_t}) {
            const auto rep = heuristic(n, critical, reps);
            if (n == 200 && critical == HeuristicCritical::normal) g_heuristic_200_normal = rep;
            const double sd = std::sqrt(0.05 * 0.95 / static_cast<double>(rep.reps - rep.degenerate));
            const bool in_band = std::abs(rep.rate - reference) <= tol;
            const bool above = rep.rate - 3.0 * sd > 0.05 &&
                               wilson_interval(rep.rejections, rep.reps - rep.degenerate, 3.0).lo > 0.05;
            any_in_band = any_in_band || in_band;
            all_above = all_above && above;
            detail += fmt("n=%d %s %.4f%%; ", n, critical == HeuristicCritical::normal ? "normal" : "t",
                          100.0 * rep.rate);
        }
        ok = ok && any_in_band && all_above;
    }
    return {ok, detail + "band +-0.20pp"};
}

Outcome criterion_6() {
    const auto& rep = g_heuristic_200_normal;
    const auto& h = rep.histogram;
    const double total = static_cast<double>(h.total());
    double cumulative = static_cast<double>(h.underflow);
    double kolmogorov = 0.0;
    for (std::size_t i = 0; i <= h.bins.size(); ++i) {
        const double edge = h.lo + h.width() * static_cast<double>(i);
        if (std::abs(edge) <= 1.5 + 1e-9) {
            kolmogorov = std::max(kolmogorov, std::abs(cumulative / total - t_cdf(edge, 199)));
        }
        if (i < h.bins.size()) cumulative += static_cast<double>(h.bins[i]);
    }
    const auto ci = wilson_interval(rep.rejections, rep.reps - rep.degenerate, 3.0);
    return {kolmogorov <= 0.01 && ci.lo > 0.05,
            fmt("Kolmogorov on |T|<=1.5: %.4f; mass beyond +-%.4f: %.5f (3-SD Wilson lo %.5f)", kolmogorov,
                rep.critical_value, rep.rate, ci.lo)};
}

Outcome criterion_7() {
    bool ok = true;
    std::string detail;
    for (double a : {0.01, 0.05, 0.1}) {
        for (Sided sided : {Sided::one, Sided::two}) {
            const int n = 20;
            SimulationConfig config{n,
                                    100000,
                                    PolicySpec::constant(kBand, n, kBand.hi()),
                                    TestSpec{sided, Probability(a), StatisticKind::z_known_sigma, kBand.hi()},
                                    NoiseKind::standard_normal,
                                    1,
                                    workers()};
            const auto rep = run(config);
            const auto ci = wilson_interval(rep.rejections, rep.reps, kZ999);
            const bool inside = ci.lo <= a && a <= ci.hi;
            ok = ok && inside;
            detail += fmt("a=%g %s %.4f; ", a, sided == Sided::one ? "one" : "two", rep.rate);
        }
    }
    return {ok, detail};
}

Outcome criterion_8() {
    const std::array<VolatilityBand, 6> bands{VolatilityBand(0.8, 1.0), VolatilityBand(0.5, 1.0),
                                              VolatilityBand(0.1, 1.0), VolatilityBand(1.0, 1.0),
                                              VolatilityBand(0.5, 2.0), VolatilityBand(1.5, 3.0)};
    int checked = 0;
    int failed = 0;
    for (const auto& band : bands) {
        for (double a : {0.01, 0.05, 0.1}) {
            for (int n : {10, 100, 1000}) {
                ++checked;
                if (!pde_policy_equiv_check(band, Probability(a), n)) ++failed;
            }
        }
    }
    return {failed == 0, fmt("%d of %d (band, alpha, n) combinations agree", checked - failed, checked)};
}

std::string capture(const std::string& command) {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"), pclose);
    if (!pipe) return {};
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), got);
    return out;
}

Outcome criterion_9() {
    const std::string base = std::string(GNORMAL_CLI_PATH) +
                             " simulate --n 20 --reps 200000 --policy heuristic-t --sigma-lo 0.8 --sigma-hi 1"
                             " --alpha 0.05 --sided two --stat t --seed 1 --no-timing --workers ";
    const std::string one = capture(base + "1");
    const std::string four = capture(base + "4");
    const std::string sixteen = capture(base + "16");
    const bool ok = !one.empty() && one == four && one == sixteen;
    return {ok, fmt("stdout sizes %zu/%zu/%zu bytes, %s", one.size(), four.size(), sixteen.size(),
                    ok ? "identical" : "differ")};
}

Outcome criterion_10() {
    double worst = 0.0;
    for (int k = -300; k <= 300; ++k) {
        // p from 1e-15 to 1 - 1e-15, dense near the tails.
        const double s = static_cast<double>(k) / 20.0;
        const double p = 1.0 / (1.0 + std::exp(-s * 2.3));
        if (p <= 0.0 || p >= 1.0) continue;
        const double back = norm_cdf(norm_quantile(p));
        worst = std::max(worst, std::abs(back - p) / std::min(p, 1.0 - p));
    }
    const double q = t_quantile(0.975, 199);
    const bool rounds = std::abs(std::round(q * 100.0) / 100.0 - 1.97) < 1e-12;
    return {worst <= 1e-12 && rounds,
            fmt("max relative round-trip error %.2e; t_quantile(0.975, 199) = %.12f", worst, q)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"two-sided capacity values and error bounds", criterion_1},
        {"G-heat solver against the one-sided closed form", criterion_2},
        {"two-sided sandwich", criterion_3},
        {"one-sided limit of the optimal policy", criterion_4},
        {"heuristic t experiment rates", criterion_5},
        {"statistic distribution at n = 200", criterion_6},
        {"null calibration of the constant policy", criterion_7},
        {"policy equivalence", criterion_8},
        {"determinism across worker counts", criterion_9},
        {"special-function contracts", criterion_10},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        const auto started = std::chrono::steady_clock::now();
        Outcome outcome{false, ""};
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::printf("%s criterion %2d: %s | %s [%.1fs]\n", outcome.pass ? "PASS" : "FAIL", index, name,
                    outcome.detail.c_str(), secs);
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
