#include "gnormal/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "gnormal/rng.hpp"

namespace gnormal {

namespace {

constexpr double kZ95 = 1.959963984540054;

struct Partial {
    std::int64_t rejections = 0;
    std::int64_t degenerate = 0;
    Histogram histogram = default_statistic_histogram();
};

// Runs one replication and returns its statistic, or nullopt when the sample
// variance is zero (t statistic only).
std::optional<double> run_replication(const SimulationConfig& config, std::int64_t replication) {
    NormalStream noise(config.seed, static_cast<std::uint64_t>(replication));
    PolicyState state;
    for (int i = 1; i <= config.n; ++i) {
        const double sigma = next_sigma(config.policy, state);
        state.observe(sigma * noise.next());
    }
    const double n = config.n;
    if (config.test.statistic == StatisticKind::z_known_sigma) {
        return state.running_sum / (std::sqrt(n) * config.test.sigma_ref);
    }
    const double mean = state.running_sum / n;
    const double var = (state.running_sum_sq - state.running_sum * mean) / (n - 1.0);
    if (!(var > 0.0)) return std::nullopt;
    return std::sqrt(n) * mean / std::sqrt(var);
}

}  // namespace

// ---------------------------------------------------------------------------

double TestSpec::critical_value(int n) const {
    const double p = sided == Sided::one ? 1.0 - alpha.value() : 1.0 - 0.5 * alpha.value();
    if (statistic == StatisticKind::t_student) return t_quantile(p, n - 1);
    return norm_quantile(p);
}

bool TestSpec::rejects(double statistic, double critical) const noexcept {
    return sided == Sided::one ? statistic > critical : std::abs(statistic) > critical;
}

void TestSpec::validate() const {
    if (!(alpha.value() > 0.0 && alpha.value() <= 0.5)) throw DomainError("test alpha must lie in (0, 0.5]");
    if (statistic == StatisticKind::z_known_sigma && !(sigma_ref > 0.0 && std::isfinite(sigma_ref))) {
        throw DomainError("z statistic needs sigma_ref > 0");
    }
}

void SimulationConfig::validate() const {
    test.validate();
    if (n < 1) throw DomainError("sample size n must be >= 1");
    if (test.statistic == StatisticKind::t_student && n < 2) {
        throw DomainError("the t statistic needs n >= 2");
    }
    if (reps < 1) throw DomainError("reps must be >= 1");
    if (workers < 1) throw DomainError("workers must be >= 1");
    if (policy.n() != n) {
        throw DomainError("policy horizon " + std::to_string(policy.n()) + " differs from n = " + std::to_string(n));
    }
}

Histogram Histogram::make(double lo, double hi, int count) {
    if (!(lo < hi) || count < 1) throw DomainError("histogram needs lo < hi and at least one bin");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bins.assign(static_cast<std::size_t>(count), 0);
    return h;
}

void Histogram::add(double value) noexcept {
    if (value < lo) {
        ++underflow;
    } else if (value >= hi) {
        ++overflow;
    } else {
        auto idx = static_cast<std::size_t>((value - lo) / width());
        ++bins[std::min(idx, bins.size() - 1)];
    }
}

void Histogram::merge(const Histogram& other) {
    if (other.bins.size() != bins.size() || other.lo != lo || other.hi != hi) {
        throw std::logic_error("cannot merge histograms with different binning");
    }
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] += other.bins[i];
    underflow += other.underflow;
    overflow += other.overflow;
}

std::int64_t Histogram::total() const noexcept {
    std::int64_t sum = underflow + overflow;
    for (auto b : bins) sum += b;
    return sum;
}

Histogram default_statistic_histogram() { return Histogram::make(-6.0, 6.0, 240); }

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
    if (trials <= 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    // The endpoints are exact at k = 0 and k = n; the formula leaves rounding residue there.
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

double t_statistic(std::span<const double> xs) {
    if (xs.size() < 2) throw UndefinedStatistic("t statistic needs at least two observations");
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) throw UndefinedStatistic("t statistic is undefined for a zero-variance sample");
    return std::sqrt(n) * mean / std::sqrt(var);
}

std::optional<double> replicate(const SimulationConfig& config, std::int64_t replication) {
    config.validate();
    return run_replication(config, replication);
}

SimulationReport run(const SimulationConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const double critical = config.test.critical_value(config.n);

    const int workers = static_cast<int>(std::min<std::int64_t>(config.workers, config.reps));
    std::vector<Partial> partials(static_cast<std::size_t>(workers));
    auto body = [&](int w, std::int64_t begin, std::int64_t end) {
        Partial& part = partials[static_cast<std::size_t>(w)];
        for (std::int64_t r = begin; r < end; ++r) {
            const auto stat = run_replication(config, r);
            if (!stat) {
                ++part.degenerate;
                continue;
            }
            part.histogram.add(*stat);
            if (config.test.rejects(*stat, critical)) ++part.rejections;
        }
    };

    const std::int64_t chunk = config.reps / workers;
    const std::int64_t extra = config.reps % workers;
    if (workers == 1) {
        body(0, 0, config.reps);
    } else {
        std::vector<std::jthread> threads;
        std::int64_t begin = 0;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t len = chunk + (w < extra ? 1 : 0);
            threads.emplace_back(body, w, begin, begin + len);
            begin += len;
        }
    }

    SimulationReport report;
    report.reps = config.reps;
    report.critical_value = critical;
    report.histogram = default_statistic_histogram();
    for (const auto& part : partials) {
        report.rejections += part.rejections;
        report.degenerate += part.degenerate;
        report.histogram.merge(part.histogram);
    }
    const std::int64_t effective = report.reps - report.degenerate;
    report.rate = effective > 0 ? static_cast<double>(report.rejections) / static_cast<double>(effective) : 0.0;
    report.ci95 = wilson_interval(report.rejections, effective, kZ95);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::vector<ConvergenceRow> capacity_convergence(const VolatilityBand& band, Probability alpha, Sided sided,
                                                 std::span<const int> n_list, std::int64_t reps,
                                                 std::uint64_t seed, int workers) {
    std::vector<ConvergenceRow> rows;
    const double a = alpha.value();
    const double target = sided == Sided::one ? p1(band.hi() * norm_quantile(1.0 - a), band)
                                              : 2.0 * p1(band.hi() * norm_quantile(1.0 - 0.5 * a), band);
    for (int n : n_list) {
        PolicySpec policy = sided == Sided::one ? PolicySpec::one_sided_optimal(band, n, alpha)
                                                : PolicySpec::two_sided_threshold(band, n, alpha);
        TestSpec test{sided, alpha, StatisticKind::z_known_sigma, band.hi()};
        SimulationConfig config{n, reps, std::move(policy), test, NoiseKind::standard_normal, seed, workers};
        const auto report = run(config);
        rows.push_back({n, report.rate, report.ci95, target});
    }
    return rows;
}

}  // namespace gnormal
