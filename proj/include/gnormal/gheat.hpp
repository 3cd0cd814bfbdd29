#pragma once

// Explicit monotone finite-difference solver for the G-heat equation
//
//     u_t = 1/2 (hi^2 (u_xx)^+ - lo^2 (u_xx)^-),   u(0, x) = phi(x)
//
// on a truncated interval with Dirichlet boundaries. The scheme is
// u^{k+1}_j = u^k_j + dt G(D^2 u^k_j / dx^2) with the three-point second
// difference, and is monotone whenever hi^2 dt <= dx^2.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gnormal/capacity.hpp"

namespace gnormal {

/// Invalid grid or solver configuration (CFL violated, empty domain, ...).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A non-finite value appeared while marching.
class NumericalFailure : public std::runtime_error {
  public:
    NumericalFailure(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    [[nodiscard]] long step() const noexcept { return step_; }

  private:
    long step_;
};

struct IndicatorAbove {
    double c;
};

struct IndicatorAbsAbove {
    double c;
};

/// 1{x < -c}, the mirror of IndicatorAbove.
struct IndicatorBelow {
    double c;
};

/// phi sampled at strictly increasing abscissae, linearly interpolated and
/// linearly extrapolated from the end segments.
struct SampledTable {
    std::vector<double> x;
    std::vector<double> phi;

    [[nodiscard]] double operator()(double at) const;
};

class InitialCondition {
  public:
    using Kind = std::variant<IndicatorAbove, IndicatorAbsAbove, IndicatorBelow, SampledTable>;

    static InitialCondition indicator_above(double c);
    static InitialCondition indicator_abs_above(double c);
    static InitialCondition indicator_below(double c);
    static InitialCondition sampled(std::vector<double> x, std::vector<double> phi);

    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

  private:
    explicit InitialCondition(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

struct GridSpec {
    double x_min = -10.0;
    double x_max = 10.0;
    int nx = 2001;
    double t_end = 1.0;
    /// hi^2 dt / dx^2; the scheme is monotone for safety in (0, 1].
    double safety = 0.9;
    /// Time levels kept by solve(), evenly spaced and including t = 0 and
    /// t_end. 0 selects every level when that fits in about 4M values,
    /// otherwise 101 levels.
    int retain_levels = 0;
    int workers = 1;

    [[nodiscard]] double dx() const { return (x_max - x_min) / (nx - 1); }
    void validate() const;
};

struct GridSolution {
    GridSpec grid;
    double dx = 0.0;
    double dt = 0.0;
    long steps = 0;
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> values;
    /// Sign of the discrete second difference per retained level; 0 at the
    /// boundary nodes and where |D^2 u| is at rounding level.
    std::vector<std::vector<std::int8_t>> uxx_sign;

    /// Linear interpolation in x at a retained level.
    [[nodiscard]] double value_at(std::size_t level, double at) const;
    /// Index of the retained level closest to time t.
    [[nodiscard]] std::size_t level_near(double t) const;
};

/// Steps the scheme one level at a time. solve(), p2_numeric(),
/// two_sided_threshold() and verify_sandwich() are all built on this.
class GHeatMarcher {
  public:
    /// The number of steps is rounded up to a multiple of step_multiple so
    /// that t_end * k / step_multiple lands exactly on a level.
    GHeatMarcher(InitialCondition ic, VolatilityBand band, GridSpec grid, long step_multiple = 1);

    /// Advances `count` steps (clamped to the remaining steps).
    void advance(long count = 1);

    [[nodiscard]] double time() const noexcept;
    [[nodiscard]] long step() const noexcept { return step_; }
    [[nodiscard]] long total_steps() const noexcept { return total_steps_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double dx() const noexcept { return dx_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return cur_; }
    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }

  private:
    void set_boundary(double t, std::vector<double>& field) const;
    void advance_serial(long count);
    void advance_parallel(long count);
    void update_range(std::size_t begin, std::size_t end);

    InitialCondition ic_;
    VolatilityBand band_;
    GridSpec grid_;
    double dx_ = 0.0;
    double dt_ = 0.0;
    double ratio_hi_ = 0.0;
    double ratio_lo_ = 0.0;
    long total_steps_ = 0;
    long step_ = 0;
    std::vector<double> x_;
    std::vector<double> cur_;
    std::vector<double> next_;
};

/// Signs of D^2 values at interior nodes with a rounding-level dead zone.
std::vector<std::int8_t> second_difference_signs(std::span<const double> values);

GridSolution solve(const InitialCondition& ic, const VolatilityBand& band, const GridSpec& grid);

/// Writes `t,x,u`, one row per node, time-major then x ascending.
void write_csv(const GridSolution& solution, std::ostream& out);

struct P2Numeric {
    double value = 0.0;
    double dx = 0.0;
    double dt = 0.0;
    long steps = 0;
    int nx = 0;
    double half_width = 0.0;
};

/// A symmetric grid on [-(c + 10 hi), c + 10 hi] with spacing about 0.01 hi.
GridSpec default_two_sided_grid(double c, const VolatilityBand& band);

/// w(1, 0) for data 1{|x| > c}. The grid is re-aligned (same span, nearby
/// spacing) so that +-c fall exactly on cell midpoints and x = 0 is a node.
P2Numeric p2_numeric(double c, const VolatilityBand& band, const GridSpec& grid);

enum class ThresholdFlag { ok, initial, degenerate, multiple, constant_policy };

const char* to_string(ThresholdFlag flag);

struct ThresholdPoint {
    double time_remaining = 0.0;
    double threshold = 0.0;
    ThresholdFlag flag = ThresholdFlag::ok;
};

/// Positive sign-change locus (+ to -) of D^2 values, linearly interpolated.
/// When several exist the one nearest `expected` is returned and flagged.
ThresholdPoint extract_threshold(std::span<const double> x, std::span<const double> values,
                                 double expected);

/// Switching thresholds of the two-sided optimal policy: for time_remaining
/// k / n_steps (k = 0..n_steps) the positive root of w_xx, where w solves the
/// G-heat equation with data 1{|x| > c} and c = hi * Phi^{-1}(1 - alpha/2).
std::vector<ThresholdPoint> two_sided_threshold(const VolatilityBand& band, double alpha, int n_steps);
std::vector<ThresholdPoint> two_sided_threshold(const VolatilityBand& band, double alpha, int n_steps,
                                                const GridSpec& grid);

struct SandwichReport {
    double max_lower_violation = 0.0;  ///< max over nodes of w - (u + v)
    double min_upper_slack = 0.0;      ///< min over nodes of bound(t) - (u + v - w)
    double max_gap = 0.0;              ///< max over nodes of u + v - w
    double epsilon_grid = 0.0;
    long nodes_checked = 0;
    bool holds = false;
};

/// Marches u, v and w on the same grid and checks
/// 0 <= u + v - w <= two_sided_error_bound(c, t) at every node with t > 0,
/// up to epsilon_grid (three times the fine-vs-coarse difference of the
/// final gap).
SandwichReport verify_sandwich(double c, const VolatilityBand& band, const GridSpec& grid);

}  // namespace gnormal
