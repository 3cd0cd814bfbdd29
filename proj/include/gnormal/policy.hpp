#pragma once

// Variance-control rules for the adversarial experimenter. Every rule is
// bang-bang: it returns either the upper or the lower volatility of the band
// (or a fixed constant), using only observations made before the current step.

#include <variant>
#include <vector>

#include "gnormal/capacity.hpp"
#include "gnormal/gheat.hpp"

namespace gnormal {

/// Which critical value the heuristic t rule compares against.
enum class HeuristicCritical {
    normal,     ///< Phi^{-1}(1 - alpha/2) at every step
    student_t,  ///< t quantile with i - 2 degrees of freedom at step i
};

struct ConstantRule {
    double sigma;
};

/// sigma_i = hi iff S_{i-1} / sqrt(n) <= hi * Phi^{-1}(1 - alpha).
struct OneSidedOptimalRule {
    double threshold;
};

/// sigma_i = hi iff |S_{i-1}| / sqrt(n) <= threshold(1 - (i-1)/n), with the
/// threshold looked up at the nearest tabulated time_remaining.
struct TwoSidedThresholdRule {
    std::vector<ThresholdPoint> table;
};

/// sigma_i = hi iff |S_{i-1}| / sqrt(n s^2_{i-1}) <= c_alpha.
struct HeuristicTRule {
    HeuristicCritical critical;
    /// critical_by_step[i] is c_alpha used at step i (entries 0..2 unused).
    std::vector<double> critical_by_step;
};

class PolicySpec {
  public:
    using Rule = std::variant<ConstantRule, OneSidedOptimalRule, TwoSidedThresholdRule, HeuristicTRule>;

    static PolicySpec constant(const VolatilityBand& band, int n, double sigma);
    static PolicySpec one_sided_optimal(const VolatilityBand& band, int n, Probability alpha);
    static PolicySpec two_sided_threshold(const VolatilityBand& band, int n, Probability alpha,
                                          std::vector<ThresholdPoint> table);
    /// Solves the two-sided G-heat problem for the threshold table (n levels).
    static PolicySpec two_sided_threshold(const VolatilityBand& band, int n, Probability alpha);
    static PolicySpec heuristic_t(const VolatilityBand& band, int n, Probability alpha,
                                  HeuristicCritical critical = HeuristicCritical::normal);

    [[nodiscard]] const Rule& rule() const noexcept { return rule_; }
    [[nodiscard]] const VolatilityBand& band() const noexcept { return band_; }
    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] Probability alpha() const noexcept { return alpha_; }
    [[nodiscard]] const char* name() const noexcept;

  private:
    PolicySpec(Rule rule, VolatilityBand band, int n, Probability alpha);

    Rule rule_;
    VolatilityBand band_;
    int n_;
    Probability alpha_;
};

/// What the experimenter knows before choosing sigma_i.
struct PolicyState {
    int i = 1;                    ///< step about to be chosen (1-based)
    double running_sum = 0.0;     ///< S_{i-1}
    double running_sum_sq = 0.0;  ///< X_1^2 + ... + X_{i-1}^2
    int count = 0;                ///< i - 1

    /// Records X_i and moves to step i + 1.
    void observe(double x) noexcept {
        running_sum += x;
        running_sum_sq += x * x;
        ++count;
        ++i;
    }
};

/// Chooses sigma_i. Throws std::logic_error when the state does not belong to the spec.
double next_sigma(const PolicySpec& spec, const PolicyState& state);

/// Checks that the sign rule on u_xx(1 - (i-1)/n, S/sqrt(n)) from the closed-form
/// profile picks the same sigma as the one-sided optimal threshold rule, for
/// every step i = 1..n and S on a grid spanning +-5 sqrt(n) (plus the exact
/// switching point).
bool pde_policy_equiv_check(const VolatilityBand& band, Probability alpha, int n);

}  // namespace gnormal
