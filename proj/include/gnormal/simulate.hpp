#pragma once

// Monte Carlo engine for variance-controlled sequences.
//
// Replication r draws eps_1..eps_n from its own counter-based stream keyed by
// (seed, r), sets X_i = sigma_i eps_i with sigma_i from the policy, and tests
// H0: E X_i = 0 with a z or t statistic. Replications are split into
// contiguous ranges across workers and merged by integer summation, so the
// report is identical for every worker count.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gnormal/policy.hpp"

namespace gnormal {

enum class Sided { one, two };
enum class StatisticKind { z_known_sigma, t_student };
enum class NoiseKind { standard_normal };

struct TestSpec {
    Sided sided = Sided::two;
    Probability alpha{0.05};
    StatisticKind statistic = StatisticKind::t_student;
    /// sigma_ref for the z statistic S_n / (sqrt(n) sigma_ref).
    double sigma_ref = 1.0;

    /// Rejection threshold: t quantile with n - 1 df for t, normal quantile
    /// for z, at 1 - alpha (one-sided) or 1 - alpha/2 (two-sided).
    [[nodiscard]] double critical_value(int n) const;
    /// Same rule the engine applies: stat > crit, or |stat| > crit.
    [[nodiscard]] bool rejects(double statistic, double critical) const noexcept;
    void validate() const;
};

struct SimulationConfig {
    int n = 20;
    std::int64_t reps = 1000;
    PolicySpec policy;
    TestSpec test;
    NoiseKind noise = NoiseKind::standard_normal;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const;
};

/// Equal-width bins on [lo, hi]; values outside are tallied separately.
struct Histogram {
    double lo = -6.0;
    double hi = 6.0;
    std::vector<std::int64_t> bins;
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;

    static Histogram make(double lo, double hi, int count);
    void add(double value) noexcept;
    void merge(const Histogram& other);
    [[nodiscard]] double width() const noexcept { return (hi - lo) / static_cast<double>(bins.size()); }
    [[nodiscard]] std::int64_t total() const noexcept;
};

/// 240 bins of width 0.05 on [-6, 6].
Histogram default_statistic_histogram();

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z);

struct SimulationReport {
    std::int64_t reps = 0;
    std::int64_t rejections = 0;
    std::int64_t degenerate = 0;
    double rate = 0.0;
    Interval ci95;
    double critical_value = 0.0;
    Histogram histogram;
    double runtime_seconds = 0.0;
};

/// Raised by t_statistic for samples with zero variance.
class UndefinedStatistic : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// sqrt(n) mean / s with divisor n - 1.
double t_statistic(std::span<const double> xs);

/// The statistic of replication r alone, or nullopt for a zero-variance sample.
std::optional<double> replicate(const SimulationConfig& config, std::int64_t replication);

SimulationReport run(const SimulationConfig& config);

struct ConvergenceRow {
    int n = 0;
    double rate = 0.0;
    Interval ci95;
    double target = 0.0;
};

/// Rejection rates of the z test (sigma_ref = hi) under the optimal policy
/// against the limiting capacity: p1(hi Phi^{-1}(1 - alpha)) = 2 alpha / (1 + lo/hi)
/// one-sided, 2 p1(hi Phi^{-1}(1 - alpha/2)) two-sided.
std::vector<ConvergenceRow> capacity_convergence(const VolatilityBand& band, Probability alpha,
                                                 Sided sided, std::span<const int> n_list,
                                                 std::int64_t reps, std::uint64_t seed, int workers = 1);

}  // namespace gnormal
