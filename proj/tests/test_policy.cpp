#include <doctest.h>

#include <cmath>

#include "gnormal/policy.hpp"

using namespace gnormal;

namespace {

const VolatilityBand kBand{0.8, 1.0};

PolicyState state_at(int i, double sum, double sum_sq = 0.0) {
    PolicyState s;
    s.i = i;
    s.count = i - 1;
    s.running_sum = sum;
    s.running_sum_sq = sum_sq;
    return s;
}

}  // namespace

TEST_CASE("constant rule") {
    const auto spec = PolicySpec::constant(kBand, 5, 0.9);
    CHECK(std::string(spec.name()) == "constant");
    PolicyState s;
    for (int i = 1; i <= 5; ++i) {
        CHECK(next_sigma(spec, s) == 0.9);
        s.observe(1.0);
    }
    CHECK_THROWS_AS(next_sigma(spec, s), std::logic_error);
    CHECK_THROWS_AS(PolicySpec::constant(kBand, 5, 1.1), DomainError);
}

TEST_CASE("one-sided optimal rule switches at hi Phi^{-1}(1 - alpha)") {
    const int n = 16;
    const auto spec = PolicySpec::one_sided_optimal(kBand, n, Probability(0.05));
    const double c = norm_quantile(0.95);
    CHECK(std::get<OneSidedOptimalRule>(spec.rule()).threshold == doctest::Approx(c).epsilon(1e-15));
    CHECK(next_sigma(spec, state_at(3, 4.0 * c)) == 1.0);  // ties go to hi
    CHECK(next_sigma(spec, state_at(3, 4.0 * c + 1e-9)) == 0.8);
    CHECK(next_sigma(spec, state_at(3, -50.0)) == 1.0);
    CHECK(next_sigma(spec, state_at(16, 100.0)) == 0.8);
}

TEST_CASE("policy rejects states that do not belong to it") {
    const auto spec = PolicySpec::one_sided_optimal(kBand, 4, Probability(0.05));
    PolicyState bad;
    bad.i = 2;
    bad.count = 0;
    CHECK_THROWS_AS(next_sigma(spec, bad), std::logic_error);
    CHECK_THROWS_AS(next_sigma(spec, state_at(5, 0.0)), std::logic_error);
    CHECK_THROWS_AS(next_sigma(spec, state_at(0, 0.0)), std::logic_error);
}

TEST_CASE("policy predictability: sigma_i ignores X_i and later") {
    // Paths that agree on X_1..X_{i-1} and differ afterwards choose the same sigma_1..sigma_i.
    const int n = 12;
    const std::vector<double> xs{0.3, -1.2, 0.8, 2.1, -0.4, 0.9, 1.7, -2.2, 0.1, 0.5, -0.6, 1.1};
    auto sigmas = [&](const PolicySpec& spec, const std::vector<double>& path) {
        std::vector<double> out;
        PolicyState state;
        for (int i = 1; i <= n; ++i) {
            out.push_back(next_sigma(spec, state));
            state.observe(out.back() * path[static_cast<std::size_t>(i - 1)]);
        }
        return out;
    };
    const std::vector<PolicySpec> specs{PolicySpec::heuristic_t(kBand, n, Probability(0.05)),
                                        PolicySpec::one_sided_optimal(kBand, n, Probability(0.05))};
    for (const auto& spec : specs) {
        const auto base = sigmas(spec, xs);
        for (int i = 1; i <= n; ++i) {
            auto other = xs;
            for (std::size_t k = static_cast<std::size_t>(i - 1); k < other.size(); ++k) other[k] = 5.0 - 3.0 * other[k];
            const auto alt = sigmas(spec, other);
            for (int j = 0; j < i; ++j) CHECK(alt[static_cast<std::size_t>(j)] == base[static_cast<std::size_t>(j)]);
        }
    }
}

TEST_CASE("heuristic t rule") {
    const int n = 30;
    const auto spec = PolicySpec::heuristic_t(kBand, n, Probability(0.05));
    CHECK(std::string(spec.name()) == "heuristic-t");
    CHECK(next_sigma(spec, state_at(1, 0.0)) == 1.0);
    CHECK(next_sigma(spec, state_at(2, 5.0, 25.0)) == 1.0);
    // Zero variance falls back to hi.
    CHECK(next_sigma(spec, state_at(4, 3.0, 3.0)) == 1.0);

    // X = (2, 2.2, 1.8): S = 6, s^2 = 0.04, statistic = 6 / sqrt(30 * 0.04) = 5.48.
    PolicyState s;
    for (double x : {2.0, 2.2, 1.8}) s.observe(x);
    CHECK(next_sigma(spec, s) == 0.8);
    // X = (1, -1, 0.5): statistic = 0.5 / sqrt(30 * 1.75) < 1.96.
    PolicyState q;
    for (double x : {1.0, -1.0, 0.5}) q.observe(x);
    CHECK(next_sigma(spec, q) == 1.0);

    const auto tspec = PolicySpec::heuristic_t(kBand, n, Probability(0.05), HeuristicCritical::student_t);
    const auto& table = std::get<HeuristicTRule>(tspec.rule()).critical_by_step;
    CHECK(table[3] == doctest::Approx(t_quantile(0.975, 1)).epsilon(1e-14));
    CHECK(table[30] == doctest::Approx(t_quantile(0.975, 28)).epsilon(1e-14));
}

TEST_CASE("two-sided threshold rule looks up the nearest tabulated time") {
    std::vector<ThresholdPoint> table{{0.0, 1.96, ThresholdFlag::initial},
                                      {0.5, 1.0, ThresholdFlag::ok},
                                      {1.0, 0.5, ThresholdFlag::ok}};
    const int n = 4;
    const auto spec = PolicySpec::two_sided_threshold(kBand, n, Probability(0.05), table);
    CHECK(std::string(spec.name()) == "two-sided-thresh");
    // i = 1: remaining 1.0, threshold 0.5, |S|/2 compared.
    CHECK(next_sigma(spec, state_at(1, 0.0)) == 1.0);
    CHECK(next_sigma(spec, state_at(2, 1.2)) == 1.0);  // remaining 0.75, tie -> 0.5 row (1.0)
    CHECK(next_sigma(spec, state_at(2, 2.2)) == 0.8);
    CHECK(next_sigma(spec, state_at(3, -1.8)) == 1.0);  // remaining 0.5, threshold 1.0
    CHECK(next_sigma(spec, state_at(3, -2.2)) == 0.8);
    CHECK(next_sigma(spec, state_at(4, 3.0)) == 1.0);  // remaining 0.25, tie -> 0.0 row (1.96)

    CHECK_THROWS_AS(PolicySpec::two_sided_threshold(kBand, n, Probability(0.05), {{0.5, 1.0, ThresholdFlag::ok}}),
                    DomainError);
}

TEST_CASE("solved two-sided policy uses the G-heat thresholds") {
    const auto spec = PolicySpec::two_sided_threshold(kBand, 5, Probability(0.05));
    const auto& table = std::get<TwoSidedThresholdRule>(spec.rule()).table;
    CHECK(table.size() == 6);
    CHECK(table.back().time_remaining == doctest::Approx(1.0));
}

TEST_CASE("pde sign rule agrees with the one-sided threshold rule") {
    for (double alpha : {0.01, 0.05, 0.1}) {
        for (int n : {10, 100}) {
            CHECK(pde_policy_equiv_check(kBand, Probability(alpha), n));
            CHECK(pde_policy_equiv_check(VolatilityBand(0.5, 2.0), Probability(alpha), n));
        }
    }
    CHECK_THROWS_AS(pde_policy_equiv_check(VolatilityBand(0.0, 1.0), Probability(0.05), 10), DomainError);
}
