#include "gnormal/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gnormal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_horizon(int n) {
    if (n < 1) throw DomainError("policy horizon n must be >= 1");
}

void require_test_alpha(Probability alpha) {
    if (!(alpha.value() > 0.0 && alpha.value() < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

double lookup_threshold(const std::vector<ThresholdPoint>& table, double time_remaining) {
    auto it = std::lower_bound(table.begin(), table.end(), time_remaining,
                               [](const ThresholdPoint& p, double t) { return p.time_remaining < t; });
    if (it == table.end()) return table.back().threshold;
    if (it == table.begin()) return it->threshold;
    const auto prev = it - 1;
    return (time_remaining - prev->time_remaining <= it->time_remaining - time_remaining) ? prev->threshold
                                                                                            : it->threshold;
}

}  // namespace

PolicySpec::PolicySpec(Rule rule, VolatilityBand band, int n, Probability alpha)
    : rule_(std::move(rule)), band_(band), n_(n), alpha_(alpha) {}

PolicySpec PolicySpec::constant(const VolatilityBand& band, int n, double sigma) {
    require_horizon(n);
    if (!(sigma >= band.lo() && sigma <= band.hi())) {
        throw DomainError("constant sigma " + std::to_string(sigma) + " lies outside the band");
    }
    return PolicySpec(ConstantRule{sigma}, band, n, Probability(0.0));
}

PolicySpec PolicySpec::one_sided_optimal(const VolatilityBand& band, int n, Probability alpha) {
    require_horizon(n);
    require_test_alpha(alpha);
    return PolicySpec(OneSidedOptimalRule{band.hi() * norm_quantile(1.0 - alpha.value())}, band, n, alpha);
}

PolicySpec PolicySpec::two_sided_threshold(const VolatilityBand& band, int n, Probability alpha,
                                           std::vector<ThresholdPoint> table) {
    require_horizon(n);
    require_test_alpha(alpha);
    if (table.empty()) throw DomainError("threshold table is empty");
    std::sort(table.begin(), table.end(),
              [](const ThresholdPoint& a, const ThresholdPoint& b) { return a.time_remaining < b.time_remaining; });
    if (table.back().time_remaining < 1.0 - 1e-12 || table.front().time_remaining > 1.0 / n + 1e-12) {
        throw DomainError("threshold table must cover time_remaining in (0, 1]");
    }
    return PolicySpec(TwoSidedThresholdRule{std::move(table)}, band, n, alpha);
}

PolicySpec PolicySpec::two_sided_threshold(const VolatilityBand& band, int n, Probability alpha) {
    require_horizon(n);
    require_test_alpha(alpha);
    return two_sided_threshold(band, n, alpha, gnormal::two_sided_threshold(band, alpha.value(), n));
}

PolicySpec PolicySpec::heuristic_t(const VolatilityBand& band, int n, Probability alpha,
                                   HeuristicCritical critical) {
    require_horizon(n);
    require_test_alpha(alpha);
    const double p = 1.0 - 0.5 * alpha.value();
    std::vector<double> table(static_cast<std::size_t>(n) + 1, 0.0);
    const double normal = norm_quantile(p);
    for (int i = 3; i <= n; ++i) {
        table[static_cast<std::size_t>(i)] = critical == HeuristicCritical::normal ? normal : t_quantile(p, i - 2);
    }
    return PolicySpec(HeuristicTRule{critical, std::move(table)}, band, n, alpha);
}

const char* PolicySpec::name() const noexcept {
    return std::visit(overloaded{
                          [](const ConstantRule&) { return "constant"; },
                          [](const OneSidedOptimalRule&) { return "one-sided-opt"; },
                          [](const TwoSidedThresholdRule&) { return "two-sided-thresh"; },
                          [](const HeuristicTRule&) { return "heuristic-t"; },
                      },
                      rule_);
}

double next_sigma(const PolicySpec& spec, const PolicyState& state) {
    if (state.i < 1 || state.i > spec.n() || state.count != state.i - 1) {
        throw std::logic_error("policy state (i = " + std::to_string(state.i) + ", count = " +
                               std::to_string(state.count) + ") does not fit horizon n = " +
                               std::to_string(spec.n()));
    }
    const double lo = spec.band().lo();
    const double hi = spec.band().hi();
    const double root_n = std::sqrt(static_cast<double>(spec.n()));
    return std::visit(
        overloaded{
            [&](const ConstantRule& r) { return r.sigma; },
            [&](const OneSidedOptimalRule& r) { return state.running_sum / root_n <= r.threshold ? hi : lo; },
            [&](const TwoSidedThresholdRule& r) {
                const double remaining = 1.0 - static_cast<double>(state.i - 1) / spec.n();
                return std::abs(state.running_sum) / root_n <= lookup_threshold(r.table, remaining) ? hi : lo;
            },
            [&](const HeuristicTRule& r) {
                if (state.i <= 2) return hi;
                const double m = state.count;
                const double var = (state.running_sum_sq - state.running_sum * state.running_sum / m) / (m - 1.0);
                if (!(var > 0.0)) return hi;
                const double stat = std::abs(state.running_sum) / std::sqrt(spec.n() * var);
                return stat <= r.critical_by_step[static_cast<std::size_t>(state.i)] ? hi : lo;
            },
        },
        spec.rule());
}

bool pde_policy_equiv_check(const VolatilityBand& band, Probability alpha, int n) {
    band.require_closed_form();
    const PolicySpec spec = PolicySpec::one_sided_optimal(band, n, alpha);
    const double c = std::get<OneSidedOptimalRule>(spec.rule()).threshold;
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<double> sums;
    constexpr int kPoints = 400;
    for (int k = 0; k <= kPoints; ++k) sums.push_back(root_n * (-5.0 + 10.0 * k / kPoints));
    sums.push_back(c * root_n);

    for (int i = 1; i <= n; ++i) {
        const double remaining = 1.0 - static_cast<double>(i - 1) / n;
        for (double s : sums) {
            PolicyState state;
            state.i = i;
            state.count = i - 1;
            state.running_sum = s;
            const double x = s / root_n;
            // u_xx(t, x) = f_yy((x - c)/sqrt(t)) / t; the sign survives underflow as a signed zero.
            const double uxx = profile_f_yy((x - c) / std::sqrt(remaining), band) / remaining;
            const double by_pde = std::signbit(uxx) ? band.lo() : band.hi();
            if (by_pde != next_sigma(spec, state)) return false;
        }
    }
    return true;
}

}  // namespace gnormal
