#pragma once

// Closed-form tail capacities of the G-normal distribution.
//
// The one-sided G-heat problem with indicator data 1{x > c} has the
// self-similar solution u(t, x) = f((x - c) / sqrt(t)). Everything in this
// header is built from that profile f and the Gaussian tail function.

#include <stdexcept>

#include "gnormal/special_fn.hpp"

namespace gnormal {

/// Raised when an approximation is requested outside the regime in which
/// its error guarantee holds.
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The interval [lo, hi] of admissible standard deviations.
///
/// Construction accepts 0 <= lo <= hi < inf with hi > 0 (the PDE solver works
/// with lo = 0); the closed forms additionally need lo > 0, which they check
/// through require_closed_form().
class VolatilityBand {
  public:
    VolatilityBand(double lo, double hi);

    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }
    [[nodiscard]] bool degenerate() const noexcept { return lo_ == hi_; }

    /// Throws DomainError unless lo > 0.
    void require_closed_form() const;

    friend bool operator==(const VolatilityBand&, const VolatilityBand&) = default;

  private:
    double lo_;
    double hi_;
};

/// A point (t, x) of the one-sided problem with threshold c.
struct TailQuery {
    double c = 0.0;
    double t = 1.0;
    double x = 0.0;
};

/// The profile f(y) = 2/(hi+lo) * int_{-y}^inf [phi(z/hi) 1{z>=0} + phi(z/lo) 1{z<0}] dz.
double profile_f(double y, const VolatilityBand& band);

/// Second derivative of the profile. Its sign is the sign of -y; at y = 0
/// it returns +0.0.
double profile_f_yy(double y, const VolatilityBand& band);

/// Solution of the G-heat equation with data 1{x > c}. t = 0 returns the data.
double u_one_sided(const TailQuery& q, const VolatilityBand& band);

/// Solution with data 1{x < -c}; the mirror image of u_one_sided.
double v_one_sided(const TailQuery& q, const VolatilityBand& band);

/// One-sided tail capacity p1(c) = u(1, 0) for threshold c.
double p1(double c, const VolatilityBand& band);

/// 2 (hi - lo) / hi * Phi(-2c / (hi sqrt t)); bound on u + v - w.
/// Requires c > hi * sqrt(t) / 2.
double two_sided_error_bound(double c, double t, const VolatilityBand& band);

/// Mills-ratio form of the same bound:
/// (hi - lo) sqrt(t) / (c sqrt(2 pi)) * exp(-2c^2 / (hi^2 t)). Requires c > hi / 2.
double two_sided_error_bound_mills(double c, double t, const VolatilityBand& band);

/// Relative error bound on (u + v - w) / (u + v) valid at every x:
/// (hi^2 - lo^2)(c^2/hi^2 + t) / (4c^2) * exp(-3c^2 / (2 hi^2 t)). Requires c > hi / 2.
double relative_error_bound(double c, double t, const VolatilityBand& band);

/// Result of approximating the two-sided capacity p2(c) by 2 p1(c).
struct TwoSidedApprox {
    double value = 0.0;           ///< 2 p1(c); never below the true p2(c).
    double abs_bound = 0.0;       ///< 0 <= value - p2 <= abs_bound
    double rel_bound = 0.0;       ///< abs_bound (Mills form) / value, at the point (1, 0)
    double rel_bound_uniform = 0.0;  ///< relative_error_bound(c, 1), uniform in x
};

/// p2(c) ~ 2 p1(c). Throws PreconditionError when c <= hi / 2.
TwoSidedApprox p2_approx(double c, const VolatilityBand& band);

}  // namespace gnormal
