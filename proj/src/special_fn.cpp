#include "gnormal/special_fn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gnormal {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kInvSqrt2 = 0.707106781186547524400844362105;
constexpr double kSqrt2Pi = 2.50662827463100050241576528481;

double polynomial(const double* coeffs, int degree, double r) {
    double acc = coeffs[degree];
    for (int k = degree - 1; k >= 0; --k) acc = acc * r + coeffs[k];
    return acc;
}

// Wichura, Algorithm AS 241 (PPND16). Relative accuracy about 1e-16.
double ppnd16(double p) {
    static constexpr double a[] = {3.3871328727963666080e0,  1.3314166789178437745e+2,
                                   1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                   4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                   3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr double b[] = {1.0,
                                   4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                   5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                   3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                   5.2264952788528545610e+3};
    static constexpr double c[] = {1.42343711074968357734e0,  4.63033784615654529590e0,
                                   5.76949722146069140550e0,  3.64784832476320460504e0,
                                   1.27045825245236838258e0,  2.41780725177450611770e-1,
                                   2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[] = {1.0,
                                   2.05319162663775882187e0,  1.67638483018380384940e0,
                                   6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                   1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                   1.05075007164441684324e-9};
    static constexpr double e[] = {6.65790464350110377720e0,  5.46378491116411436990e0,
                                   1.78482653991729133580e0,  2.96560571828504891230e-1,
                                   2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                   2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[] = {1.0,
                                   5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                   1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                   1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                   2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * polynomial(a, 7, r) / polynomial(b, 7, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = polynomial(c, 7, r) / polynomial(d, 7, r);
    } else {
        r -= 5.0;
        value = polynomial(e, 7, r) / polynomial(f, 7, r);
    }
    return q < 0.0 ? -value : value;
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 20000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

// y = 1 - x is passed separately so callers can keep it exact when x is close to 1.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log(y) + std::lgamma(a + b) -
                             std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// P(T > x) for x >= 0.
double t_upper_tail(double x, int df) {
    if (std::isinf(x)) return 0.0;
    const double nu = df;
    const double x2 = x * x;
    const double z = nu / (nu + x2);
    const double w = x2 / (nu + x2);
    return 0.5 * incomplete_beta_xy(0.5 * nu, 0.5, z, w);
}

double t_pdf(double x, int df) {
    const double nu = df;
    const double log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * std::numbers::pi);
    return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

void require_df(int df) {
    if (df < 1) throw DomainError("degrees of freedom must be >= 1, got " + std::to_string(df));
}

}  // namespace

double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("norm_quantile requires p in (0, 1), got " + std::to_string(p));
    }
    double x = ppnd16(p);
    // One Halley step against the complementary tail keeps full relative accuracy in both tails.
    const double err = p < 0.5 ? norm_cdf(x) - p : (1.0 - p) - norm_cdf(-x);
    const double u = err * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta requires a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta requires x in [0, 1]");
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double t_cdf(double x, int df) {
    require_df(df);
    if (std::isnan(x)) return x;
    if (x == 0.0) return 0.5;
    const double tail = t_upper_tail(std::abs(x), df);
    return x > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, int df) {
    require_df(df);
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("t_quantile requires p in (0, 1), got " + std::to_string(p));
    }
    if (p == 0.5) return 0.0;
    const double tail = std::min(p, 1.0 - p);
    const double sign = p > 0.5 ? 1.0 : -1.0;

    // Bracket the root of t_upper_tail(x) = tail on x > 0, then safeguarded Newton.
    double lo = 0.0;
    double hi = std::max(1.0, 2.0 * std::abs(norm_quantile(tail)));
    while (t_upper_tail(hi, df) > tail) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) return sign * std::numeric_limits<double>::infinity();
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        const double diff = t_upper_tail(x, df) - tail;
        if (diff == 0.0) break;
        if (diff > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double next = x + diff / t_pdf(x, df);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
            x = next;
            break;
        }
        x = next;
    }
    return sign * x;
}

}  // namespace gnormal
