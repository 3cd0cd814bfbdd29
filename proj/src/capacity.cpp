#include "gnormal/capacity.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gnormal {

namespace {

void require_above_half_hi(double c, double limit, const char* what) {
    if (!(c > limit)) {
        throw PreconditionError(std::string(what) + ": requires c > " + std::to_string(limit) +
                                ", got c = " + std::to_string(c));
    }
}

}  // namespace

VolatilityBand::VolatilityBand(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo >= 0.0 && hi > 0.0 && lo <= hi && std::isfinite(hi))) {
        throw DomainError("volatility band requires 0 <= lo <= hi < inf and hi > 0, got [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

void VolatilityBand::require_closed_form() const {
    if (!(lo_ > 0.0)) throw DomainError("closed-form capacities require a strictly positive lower volatility");
}

// The integral splits at z = 0 into two Gaussian tails:
//   y < 0:  2 hi / (hi + lo) * Phi(y / hi)
//   y >= 0: 1 - 2 lo / (hi + lo) * Phi(-y / lo)
double profile_f(double y, const VolatilityBand& band) {
    band.require_closed_form();
    const double lo = band.lo();
    const double hi = band.hi();
    if (y < 0.0) return 2.0 * hi / (hi + lo) * norm_cdf(y / hi);
    return 1.0 - 2.0 * lo / (hi + lo) * norm_cdf(-y / lo);
}

double profile_f_yy(double y, const VolatilityBand& band) {
    band.require_closed_form();
    if (y == 0.0) return 0.0;
    const double lo = band.lo();
    const double hi = band.hi();
    const double scale = y < 0.0 ? norm_pdf(y / hi) / (hi * hi) : norm_pdf(y / lo) / (lo * lo);
    return -2.0 * y / (hi + lo) * scale;
}

double u_one_sided(const TailQuery& q, const VolatilityBand& band) {
    band.require_closed_form();
    if (q.t < 0.0) throw DomainError("u_one_sided requires t >= 0");
    if (q.t == 0.0) return q.x > q.c ? 1.0 : 0.0;
    return profile_f((q.x - q.c) / std::sqrt(q.t), band);
}

double v_one_sided(const TailQuery& q, const VolatilityBand& band) {
    band.require_closed_form();
    if (q.t < 0.0) throw DomainError("v_one_sided requires t >= 0");
    if (q.t == 0.0) return q.x < -q.c ? 1.0 : 0.0;
    return profile_f((-q.x - q.c) / std::sqrt(q.t), band);
}

double p1(double c, const VolatilityBand& band) { return profile_f(-c, band); }

double two_sided_error_bound(double c, double t, const VolatilityBand& band) {
    band.require_closed_form();
    if (!(t > 0.0)) throw DomainError("two_sided_error_bound requires t > 0");
    require_above_half_hi(c, 0.5 * band.hi() * std::sqrt(t), "two_sided_error_bound");
    const double hi = band.hi();
    return 2.0 * (hi - band.lo()) / hi * norm_cdf(-2.0 * c / (hi * std::sqrt(t)));
}

double two_sided_error_bound_mills(double c, double t, const VolatilityBand& band) {
    band.require_closed_form();
    if (!(t > 0.0)) throw DomainError("two_sided_error_bound_mills requires t > 0");
    require_above_half_hi(c, 0.5 * band.hi(), "two_sided_error_bound_mills");
    const double hi = band.hi();
    return (hi - band.lo()) * std::sqrt(t) / (c * std::sqrt(2.0 * std::numbers::pi)) *
           std::exp(-2.0 * c * c / (hi * hi * t));
}

double relative_error_bound(double c, double t, const VolatilityBand& band) {
    band.require_closed_form();
    if (!(t > 0.0)) throw DomainError("relative_error_bound requires t > 0");
    require_above_half_hi(c, 0.5 * band.hi(), "relative_error_bound");
    const double lo = band.lo();
    const double hi = band.hi();
    const double c2 = c * c;
    return (hi * hi - lo * lo) * (c2 / (hi * hi) + t) / (4.0 * c2) *
           std::exp(-1.5 * c2 / (hi * hi * t));
}

TwoSidedApprox p2_approx(double c, const VolatilityBand& band) {
    band.require_closed_form();
    require_above_half_hi(c, 0.5 * band.hi(), "p2_approx");
    TwoSidedApprox out;
    out.value = 2.0 * p1(c, band);
    out.abs_bound = two_sided_error_bound(c, 1.0, band);
    out.rel_bound = two_sided_error_bound_mills(c, 1.0, band) / out.value;
    out.rel_bound_uniform = relative_error_bound(c, 1.0, band);
    return out;
}

}  // namespace gnormal
