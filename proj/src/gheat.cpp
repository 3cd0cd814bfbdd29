#include "gnormal/gheat.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "gnormal/numeric_format.hpp"

namespace gnormal {

namespace {

constexpr std::size_t kRetainAllBudget = 4'000'000;
constexpr int kDefaultRetainLevels = 101;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Same as profile_f but also defined for lo = 0 (the limit lo -> 0).
double profile_any(double y, double lo, double hi) {
    if (y < 0.0) return 2.0 * hi / (hi + lo) * norm_cdf(y / hi);
    if (lo == 0.0) return 1.0;
    return 1.0 - 2.0 * lo / (hi + lo) * norm_cdf(-y / lo);
}

double closed_above(double t, double x, double c, const VolatilityBand& band) {
    if (t <= 0.0) return x > c ? 1.0 : 0.0;
    return profile_any((x - c) / std::sqrt(t), band.lo(), band.hi());
}

double closed_below(double t, double x, double c, const VolatilityBand& band) {
    if (t <= 0.0) return x < -c ? 1.0 : 0.0;
    return profile_any((-x - c) / std::sqrt(t), band.lo(), band.hi());
}

// Index J of the node just left of the cell midpoint nearest to `at`; ties go up.
long snap_left_index(double at, double x_min, double dx) {
    return static_cast<long>(std::floor((at - x_min) / dx));
}

long base_steps(const GridSpec& grid, const VolatilityBand& band) {
    const double dx = grid.dx();
    const double dt_max = grid.safety * dx * dx / (band.hi() * band.hi());
    return std::max<long>(1, static_cast<long>(std::ceil(grid.t_end / dt_max - 1e-9)));
}

std::vector<double> sample_initial(const InitialCondition& ic, std::span<const double> x,
                                   double x_min, double x_max, double dx) {
    const long nx = static_cast<long>(x.size());
    std::vector<double> out(x.size(), 0.0);
    std::visit(overloaded{
                   [&](const IndicatorAbove& k) {
                       const long j = snap_left_index(k.c, x_min, dx);
                       for (long i = std::max(0L, j + 1); i < nx; ++i) out[i] = 1.0;
                   },
                   [&](const IndicatorBelow& k) {
                       // Mirror image of IndicatorAbove about the grid centre.
                       const long j = snap_left_index(x_min + x_max + k.c, x_min, dx);
                       for (long i = 0; i < std::min(nx, nx - 1 - j); ++i) out[i] = 1.0;
                   },
                   [&](const IndicatorAbsAbove& k) {
                       const long jr = snap_left_index(k.c, x_min, dx);
                       for (long i = std::max(0L, jr + 1); i < nx; ++i) out[i] = 1.0;
                       const long jl = snap_left_index(x_min + x_max + k.c, x_min, dx);
                       for (long i = 0; i < std::min(nx, nx - 1 - jl); ++i) out[i] = 1.0;
                   },
                   [&](const SampledTable& table) {
                       for (long i = 0; i < nx; ++i) out[i] = table(x[i]);
                   },
               },
               ic.kind());
    return out;
}

}  // namespace

double SampledTable::operator()(double at) const {
    if (x.size() == 1) return phi.front();
    auto it = std::upper_bound(x.begin(), x.end(), at);
    std::size_t hi = static_cast<std::size_t>(it - x.begin());
    hi = std::clamp<std::size_t>(hi, 1, x.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = (at - x[lo]) / (x[hi] - x[lo]);
    return phi[lo] + w * (phi[hi] - phi[lo]);
}

InitialCondition InitialCondition::indicator_above(double c) {
    if (!std::isfinite(c)) throw DomainError("indicator threshold must be finite");
    return InitialCondition(IndicatorAbove{c});
}

InitialCondition InitialCondition::indicator_abs_above(double c) {
    if (!std::isfinite(c)) throw DomainError("indicator threshold must be finite");
    return InitialCondition(IndicatorAbsAbove{c});
}

InitialCondition InitialCondition::indicator_below(double c) {
    if (!std::isfinite(c)) throw DomainError("indicator threshold must be finite");
    return InitialCondition(IndicatorBelow{c});
}

InitialCondition InitialCondition::sampled(std::vector<double> x, std::vector<double> phi) {
    if (x.empty() || x.size() != phi.size()) {
        throw DomainError("sampled initial condition needs matching, non-empty x and phi columns");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(phi[i])) {
            throw DomainError("sampled initial condition contains a non-finite entry");
        }
        if (i > 0 && !(x[i] > x[i - 1])) {
            throw DomainError("sampled initial condition needs strictly increasing x");
        }
    }
    return InitialCondition(SampledTable{std::move(x), std::move(phi)});
}

void GridSpec::validate() const {
    if (!(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max)) {
        throw ConfigError("grid requires finite x_min < x_max");
    }
    if (nx < 3) throw ConfigError("grid requires nx >= 3");
    if (!(t_end > 0.0 && std::isfinite(t_end))) throw ConfigError("grid requires t_end > 0");
    if (!(safety > 0.0 && safety <= 1.0)) {
        throw ConfigError("CFL safety factor must lie in (0, 1], got " + std::to_string(safety));
    }
    if (retain_levels == 1 || retain_levels < 0) throw ConfigError("retain_levels must be 0 or >= 2");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

// ---------------------------------------------------------------------------
// GHeatMarcher

GHeatMarcher::GHeatMarcher(InitialCondition ic, VolatilityBand band, GridSpec grid, long step_multiple)
    : ic_(std::move(ic)), band_(band), grid_(grid) {
    grid_.validate();
    if (step_multiple < 1) throw ConfigError("step multiple must be >= 1");
    dx_ = grid_.dx();
    const long base = base_steps(grid_, band_);
    total_steps_ = ((base + step_multiple - 1) / step_multiple) * step_multiple;
    dt_ = grid_.t_end / static_cast<double>(total_steps_);
    ratio_hi_ = 0.5 * band_.hi() * band_.hi() * dt_ / (dx_ * dx_);
    ratio_lo_ = 0.5 * band_.lo() * band_.lo() * dt_ / (dx_ * dx_);

    x_.resize(static_cast<std::size_t>(grid_.nx));
    for (int j = 0; j < grid_.nx; ++j) x_[j] = grid_.x_min + j * dx_;
    x_.back() = grid_.x_max;
    cur_ = sample_initial(ic_, x_, grid_.x_min, grid_.x_max, dx_);
    next_ = cur_;
}

double GHeatMarcher::time() const noexcept {
    if (step_ == total_steps_) return grid_.t_end;
    return grid_.t_end * static_cast<double>(step_) / static_cast<double>(total_steps_);
}

void GHeatMarcher::set_boundary(double t, std::vector<double>& field) const {
    const double xl = x_.front();
    const double xr = x_.back();
    std::visit(overloaded{
                   [&](const IndicatorAbove& k) {
                       field.front() = closed_above(t, xl, k.c, band_);
                       field.back() = closed_above(t, xr, k.c, band_);
                   },
                   [&](const IndicatorBelow& k) {
                       field.front() = closed_below(t, xl, k.c, band_);
                       field.back() = closed_below(t, xr, k.c, band_);
                   },
                   [&](const IndicatorAbsAbove& k) {
                       field.front() = closed_above(t, xl, k.c, band_) + closed_below(t, xl, k.c, band_);
                       field.back() = closed_above(t, xr, k.c, band_) + closed_below(t, xr, k.c, band_);
                   },
                   [&](const SampledTable&) {
                       // Held at phi(x_boundary), which is what cur_ already carries.
                       field.front() = cur_.front();
                       field.back() = cur_.back();
                   },
               },
               ic_.kind());
}

void GHeatMarcher::update_range(std::size_t begin, std::size_t end) {
    const double* u = cur_.data();
    double* out = next_.data();
    const double rh = ratio_hi_;
    const double rl = ratio_lo_;
    for (std::size_t j = begin; j < end; ++j) {
        // (u[j+1] + u[j-1]) first keeps the update bitwise symmetric under x -> -x.
        const double d2 = (u[j + 1] + u[j - 1]) - 2.0 * u[j];
        out[j] = u[j] + (d2 > 0.0 ? rh : rl) * d2;
    }
}

void GHeatMarcher::advance(long count) {
    count = std::min(count, total_steps_ - step_);
    if (count <= 0) return;
    const int workers = std::min(grid_.workers, grid_.nx - 2);
    if (workers > 1 && count > 1) {
        advance_parallel(count);
    } else {
        advance_serial(count);
    }
}

namespace {

bool all_finite(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return std::isfinite(acc);
}

}  // namespace

void GHeatMarcher::advance_serial(long count) {
    const std::size_t n = cur_.size();
    for (long k = 0; k < count; ++k) {
        update_range(1, n - 1);
        ++step_;
        set_boundary(time(), next_);
        std::swap(cur_, next_);
        if (!all_finite(cur_)) {
            throw NumericalFailure("non-finite value in G-heat solution at step " + std::to_string(step_),
                                   step_);
        }
    }
}

void GHeatMarcher::advance_parallel(long count) {
    const std::size_t interior = cur_.size() - 2;
    const int workers = std::min<int>(grid_.workers, static_cast<int>(interior));
    std::atomic<bool> bad{false};
    bool stop = false;
    long failed_at = -1;
    long remaining = count;

    auto on_step_done = [&]() noexcept {
        ++step_;
        set_boundary(time(), next_);
        std::swap(cur_, next_);
        if (bad.load(std::memory_order_relaxed) || !std::isfinite(cur_.front() + cur_.back())) {
            failed_at = step_;
            stop = true;
        }
        if (--remaining == 0) stop = true;
    };
    std::barrier sync(workers, on_step_done);

    auto body = [&](std::size_t begin, std::size_t end) {
        while (true) {
            update_range(begin, end);
            if (!all_finite(std::span<const double>(next_).subspan(begin, end - begin))) {
                bad.store(true, std::memory_order_relaxed);
            }
            sync.arrive_and_wait();
            if (stop) break;
        }
    };

    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    const std::size_t chunk = interior / workers;
    const std::size_t extra = interior % workers;
    std::size_t begin = 1;
    for (int w = 0; w < workers; ++w) {
        const std::size_t len = chunk + (static_cast<std::size_t>(w) < extra ? 1 : 0);
        threads.emplace_back(body, begin, begin + len);
        begin += len;
    }
    threads.clear();  // joins
    if (failed_at >= 0) {
        throw NumericalFailure("non-finite value in G-heat solution at step " + std::to_string(failed_at),
                               failed_at);
    }
}

// ---------------------------------------------------------------------------

std::vector<std::int8_t> second_difference_signs(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::int8_t> signs(n, 0);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double d2 = (values[j + 1] + values[j - 1]) - 2.0 * values[j];
        const double scale = std::abs(values[j + 1]) + std::abs(values[j - 1]) + 2.0 * std::abs(values[j]);
        if (std::abs(d2) <= 16.0 * eps * scale) continue;
        signs[j] = d2 > 0.0 ? 1 : -1;
    }
    return signs;
}

double GridSolution::value_at(std::size_t level, double at) const {
    const auto& row = values.at(level);
    if (at <= x.front()) return row.front();
    if (at >= x.back()) return row.back();
    const double pos = (at - x.front()) / dx;
    std::size_t j = std::min(static_cast<std::size_t>(pos), x.size() - 2);
    const double w = (at - x[j]) / dx;
    return row[j] + w * (row[j + 1] - row[j]);
}

std::size_t GridSolution::level_near(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) return times.size() - 1;
    if (it == times.begin()) return 0;
    const auto prev = it - 1;
    return static_cast<std::size_t>((t - *prev <= *it - t ? prev : it) - times.begin());
}

GridSolution solve(const InitialCondition& ic, const VolatilityBand& band, const GridSpec& grid) {
    grid.validate();
    long intervals = grid.retain_levels > 0 ? grid.retain_levels - 1 : 0;
    if (intervals == 0) {
        const long base = base_steps(grid, band);
        const auto all = static_cast<std::size_t>(base + 1) * static_cast<std::size_t>(grid.nx);
        intervals = all <= kRetainAllBudget ? base : kDefaultRetainLevels - 1;
    }
    GHeatMarcher marcher(ic, band, grid, intervals);

    GridSolution out;
    out.grid = grid;
    out.dx = marcher.dx();
    out.dt = marcher.dt();
    out.steps = marcher.total_steps();
    out.x.assign(marcher.x().begin(), marcher.x().end());

    auto record = [&] {
        out.times.push_back(marcher.time());
        out.values.emplace_back(marcher.values().begin(), marcher.values().end());
        out.uxx_sign.push_back(second_difference_signs(marcher.values()));
    };
    record();
    const long per_level = marcher.total_steps() / intervals;
    for (long k = 0; k < intervals; ++k) {
        marcher.advance(per_level);
        record();
    }
    return out;
}

void write_csv(const GridSolution& solution, std::ostream& out) {
    out << "t,x,u\n";
    for (std::size_t k = 0; k < solution.times.size(); ++k) {
        const std::string t = shortest(solution.times[k]);
        for (std::size_t j = 0; j < solution.x.size(); ++j) {
            out << t << ',' << shortest(solution.x[j]) << ',' << shortest(solution.values[k][j]) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Two-sided capacity, thresholds, sandwich

GridSpec default_two_sided_grid(double c, const VolatilityBand& band) {
    const double half = std::abs(c) + 10.0 * band.hi();
    const double dx = 0.01 * band.hi();
    const long k = static_cast<long>(std::ceil(half / dx - 1e-9));
    GridSpec grid;
    grid.x_min = -k * dx;
    grid.x_max = k * dx;
    grid.nx = static_cast<int>(2 * k + 1);
    grid.t_end = 1.0;
    grid.safety = 0.9;
    return grid;
}

P2Numeric p2_numeric(double c, const VolatilityBand& band, const GridSpec& grid) {
    grid.validate();
    if (!(c >= 0.0 && std::isfinite(c))) throw DomainError("p2_numeric requires a finite c >= 0");
    const double half = std::min(-grid.x_min, grid.x_max);
    const double needed = c + 8.0 * band.hi();
    if (half < needed) {
        throw ConfigError("p2_numeric grid must cover [-(c + 8 hi), c + 8 hi]; half-width " +
                          std::to_string(half) + " < " + std::to_string(needed));
    }
    const double span = std::max(-grid.x_min, grid.x_max);
    double dx = grid.dx();
    if (c > 0.0) {
        const double m = std::max(0.0, std::round(c / dx - 0.5));
        dx = c / (m + 0.5);
    }
    const long k = static_cast<long>(std::ceil(span / dx - 1e-9));

    GridSpec aligned = grid;
    aligned.x_min = -k * dx;
    aligned.x_max = k * dx;
    aligned.nx = static_cast<int>(2 * k + 1);
    aligned.t_end = 1.0;

    GHeatMarcher marcher(InitialCondition::indicator_abs_above(c), band, aligned);
    marcher.advance(marcher.total_steps());

    P2Numeric out;
    out.value = marcher.values()[static_cast<std::size_t>(k)];
    out.dx = marcher.dx();
    out.dt = marcher.dt();
    out.steps = marcher.total_steps();
    out.nx = aligned.nx;
    out.half_width = aligned.x_max;
    return out;
}

const char* to_string(ThresholdFlag flag) {
    switch (flag) {
        case ThresholdFlag::ok: return "ok";
        case ThresholdFlag::initial: return "initial";
        case ThresholdFlag::degenerate: return "degenerate";
        case ThresholdFlag::multiple: return "multiple";
        case ThresholdFlag::constant_policy: return "constant-policy";
    }
    return "unknown";
}

ThresholdPoint extract_threshold(std::span<const double> x, std::span<const double> values,
                                 double expected) {
    const auto signs = second_difference_signs(values);
    std::vector<double> roots;
    int prev_sign = 0;
    std::size_t prev_j = 0;
    double prev_d2 = 0.0;
    for (std::size_t j = 1; j + 1 < values.size(); ++j) {
        if (signs[j] == 0) continue;
        const double d2 = (values[j + 1] + values[j - 1]) - 2.0 * values[j];
        if (prev_sign > 0 && signs[j] < 0) {
            const double root = x[prev_j] + prev_d2 / (prev_d2 - d2) * (x[j] - x[prev_j]);
            if (root > 0.0) roots.push_back(root);
        }
        prev_sign = signs[j];
        prev_j = j;
        prev_d2 = d2;
    }
    ThresholdPoint out;
    if (roots.empty()) {
        out.threshold = expected;
        out.flag = ThresholdFlag::degenerate;
        return out;
    }
    auto nearest = std::min_element(roots.begin(), roots.end(), [&](double a, double b) {
        return std::abs(a - expected) < std::abs(b - expected);
    });
    out.threshold = *nearest;
    out.flag = roots.size() > 1 ? ThresholdFlag::multiple : ThresholdFlag::ok;
    return out;
}

std::vector<ThresholdPoint> two_sided_threshold(const VolatilityBand& band, double alpha, int n_steps) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const double c = band.hi() * norm_quantile(1.0 - 0.5 * alpha);
    return two_sided_threshold(band, alpha, n_steps, default_two_sided_grid(c, band));
}

std::vector<ThresholdPoint> two_sided_threshold(const VolatilityBand& band, double alpha, int n_steps,
                                                const GridSpec& grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (n_steps < 1) throw DomainError("n_steps must be >= 1");
    const double c = band.hi() * norm_quantile(1.0 - 0.5 * alpha);

    GHeatMarcher marcher(InitialCondition::indicator_abs_above(c), band, grid, n_steps);
    std::vector<ThresholdPoint> out;
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.push_back({0.0, c, ThresholdFlag::initial});
    const long per_level = marcher.total_steps() / n_steps;
    for (int k = 1; k <= n_steps; ++k) {
        marcher.advance(per_level);
        ThresholdPoint pt = extract_threshold(marcher.x(), marcher.values(), c);
        pt.time_remaining = marcher.time();
        if (band.degenerate() && pt.flag == ThresholdFlag::ok) pt.flag = ThresholdFlag::constant_policy;
        out.push_back(pt);
    }
    return out;
}

namespace {

// Gap u + v - w at the final time on `grid`.
std::vector<double> final_gap(double c, const VolatilityBand& band, GridSpec grid) {
    grid.workers = 1;
    GHeatMarcher u(InitialCondition::indicator_above(c), band, grid);
    GHeatMarcher v(InitialCondition::indicator_below(c), band, grid);
    GHeatMarcher w(InitialCondition::indicator_abs_above(c), band, grid);
    u.advance(u.total_steps());
    v.advance(v.total_steps());
    w.advance(w.total_steps());
    std::vector<double> gap(u.values().size());
    for (std::size_t j = 0; j < gap.size(); ++j) gap[j] = (u.values()[j] + v.values()[j]) - w.values()[j];
    return gap;
}

}  // namespace

SandwichReport verify_sandwich(double c, const VolatilityBand& band, const GridSpec& grid) {
    band.require_closed_form();
    grid.validate();
    if (!(c > 0.5 * band.hi() * std::sqrt(grid.t_end))) {
        throw PreconditionError("verify_sandwich requires c > hi * sqrt(t_end) / 2");
    }
    GridSpec serial = grid;
    serial.workers = 1;
    GHeatMarcher u(InitialCondition::indicator_above(c), band, serial);
    GHeatMarcher v(InitialCondition::indicator_below(c), band, serial);
    GHeatMarcher w(InitialCondition::indicator_abs_above(c), band, serial);

    SandwichReport report;
    report.max_lower_violation = -std::numeric_limits<double>::infinity();
    report.min_upper_slack = std::numeric_limits<double>::infinity();
    report.max_gap = -std::numeric_limits<double>::infinity();
    const std::size_t n = u.values().size();
    std::vector<double> gap(n);
    while (u.step() < u.total_steps()) {
        u.advance();
        v.advance();
        w.advance();
        const double bound = two_sided_error_bound(c, u.time(), band);
        for (std::size_t j = 0; j < n; ++j) {
            gap[j] = (u.values()[j] + v.values()[j]) - w.values()[j];
            report.max_lower_violation = std::max(report.max_lower_violation, -gap[j]);
            report.min_upper_slack = std::min(report.min_upper_slack, bound - gap[j]);
            report.max_gap = std::max(report.max_gap, gap[j]);
        }
        report.nodes_checked += static_cast<long>(n);
    }

    // Discretisation tolerance from a grid with twice the spacing.
    GridSpec coarse = serial;
    coarse.nx = (grid.nx - 1) / 2 + 1;
    if (coarse.nx < 3) throw ConfigError("verify_sandwich needs nx >= 5 for the coarse comparison");
    const auto coarse_gap = final_gap(c, band, coarse);
    const double coarse_dx = coarse.dx();
    double residual = 0.0;
    const std::span<const double> xs = u.x();
    for (std::size_t i = 0; i < coarse_gap.size(); ++i) {
        const double at = coarse.x_min + static_cast<double>(i) * coarse_dx;
        const double pos = std::clamp((at - xs.front()) / u.dx(), 0.0, static_cast<double>(n - 1));
        const std::size_t j = std::min(static_cast<std::size_t>(pos), n - 2);
        const double frac = pos - static_cast<double>(j);
        const double fine = gap[j] + frac * (gap[j + 1] - gap[j]);
        residual = std::max(residual, std::abs(fine - coarse_gap[i]));
    }
    report.epsilon_grid = 3.0 * residual + 1e-12;
    report.holds = report.max_lower_violation <= report.epsilon_grid &&
                   report.min_upper_slack >= -report.epsilon_grid;
    return report;
}

}  // namespace gnormal
