#include <doctest.h>

#include <cmath>

#include "gnormal/simulate.hpp"

using namespace gnormal;

namespace {

const VolatilityBand kBand{0.8, 1.0};

SimulationConfig heuristic_config(int n, std::int64_t reps, int workers) {
    return SimulationConfig{n,
                            reps,
                            PolicySpec::heuristic_t(kBand, n, Probability(0.05)),
                            TestSpec{Sided::two, Probability(0.05), StatisticKind::t_student, 1.0},
                            NoiseKind::standard_normal,
                            99,
                            workers};
}

}  // namespace

TEST_CASE("t_statistic") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    // mean 2.5, s^2 = 5/3
    CHECK(t_statistic(xs) == doctest::Approx(2.0 * 2.5 / std::sqrt(5.0 / 3.0)).epsilon(1e-14));
    const std::vector<double> constant{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(t_statistic(constant), UndefinedStatistic);
    const std::vector<double> single{1.0};
    CHECK_THROWS_AS(t_statistic(single), UndefinedStatistic);
}

TEST_CASE("wilson interval") {
    const auto ci = wilson_interval(50, 1000, 1.959963984540054);
    // statsmodels proportion_confint(50, 1000, method="wilson")
    CHECK(ci.lo == doctest::Approx(0.038151).epsilon(1e-4));
    CHECK(ci.hi == doctest::Approx(0.065361).epsilon(1e-4));
    const auto zero = wilson_interval(0, 100, 1.959963984540054);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi > 0.0);
    const auto all = wilson_interval(100, 100, 1.959963984540054);
    CHECK(all.hi == doctest::Approx(1.0));
    CHECK(all.lo < 1.0);
}

TEST_CASE("histogram binning") {
    auto h = default_statistic_histogram();
    CHECK(h.bins.size() == 240);
    CHECK(h.width() == doctest::Approx(0.05));
    h.add(-6.5);
    h.add(6.0);
    h.add(-6.0);
    h.add(0.0);
    h.add(0.049);
    CHECK(h.underflow == 1);
    CHECK(h.overflow == 1);
    CHECK(h.bins[0] == 1);
    CHECK(h.bins[120] == 2);
    CHECK(h.total() == 5);
    auto other = default_statistic_histogram();
    other.add(1.0);
    h.merge(other);
    CHECK(h.total() == 6);
    CHECK_THROWS_AS(h.merge(Histogram::make(-1.0, 1.0, 10)), std::logic_error);
}

TEST_CASE("config validation") {
    auto cfg = heuristic_config(10, 100, 1);
    CHECK_NOTHROW(cfg.validate());
    cfg.n = 11;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = heuristic_config(10, 0, 1);
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = heuristic_config(10, 10, 0);
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = heuristic_config(10, 10, 1);
    cfg.test.alpha = Probability(0.7);
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("critical values") {
    const TestSpec two{Sided::two, Probability(0.05), StatisticKind::t_student, 1.0};
    CHECK(two.critical_value(200) == doctest::Approx(1.971956544251754).epsilon(1e-12));
    const TestSpec one{Sided::one, Probability(0.05), StatisticKind::z_known_sigma, 1.0};
    CHECK(one.critical_value(50) == doctest::Approx(1.6448536269514729).epsilon(1e-12));
    CHECK(two.rejects(-2.0, 1.97));
    CHECK_FALSE(one.rejects(-2.0, 1.64));
}

TEST_CASE("report does not depend on the worker count") {
    const auto one = run(heuristic_config(20, 3001, 1));
    const auto three = run(heuristic_config(20, 3001, 3));
    const auto many = run(heuristic_config(20, 3001, 16));
    CHECK(one.rejections == three.rejections);
    CHECK(one.rejections == many.rejections);
    CHECK(one.histogram.bins == three.histogram.bins);
    CHECK(one.histogram.bins == many.histogram.bins);
    CHECK(one.rate == many.rate);
}

TEST_CASE("histogram tails account for every rejection") {
    auto cfg = heuristic_config(20, 2000, 1);
    const auto rep = run(cfg);
    std::int64_t rejected = 0;
    for (std::int64_t r = 0; r < cfg.reps; ++r) {
        const auto stat = replicate(cfg, r);
        REQUIRE(stat.has_value());
        if (cfg.test.rejects(*stat, rep.critical_value)) ++rejected;
    }
    CHECK(rejected == rep.rejections);
    CHECK(rep.histogram.total() == cfg.reps - rep.degenerate);
}

TEST_CASE("classical case: constant sigma gives nominal size") {
    const int n = 20;
    SimulationConfig cfg{n,
                         40000,
                         PolicySpec::constant(kBand, n, 1.0),
                         TestSpec{Sided::two, Probability(0.05), StatisticKind::t_student, 1.0},
                         NoiseKind::standard_normal,
                         7,
                         1};
    const auto rep = run(cfg);
    const auto ci = wilson_interval(rep.rejections, rep.reps, 3.2905267314919255);
    CHECK(ci.lo <= 0.05);
    CHECK(ci.hi >= 0.05);
}

TEST_CASE("one-sided optimal policy approaches its capacity") {
    const std::vector<int> ns{200};
    const auto rows = capacity_convergence(kBand, Probability(0.05), Sided::one, ns, 40000, 11);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].target == doctest::Approx(0.1 / 1.8).epsilon(1e-12));
    CHECK(std::abs(rows[0].rate - rows[0].target) < 0.006);
}
