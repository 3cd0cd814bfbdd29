#pragma once

#include <stdexcept>
#include <string>

namespace gnormal {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A value in [0, 1]. Used for significance levels and other configured
/// probabilities; the special functions themselves return plain doubles.
class Probability {
  public:
    constexpr Probability() = default;
    explicit Probability(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw DomainError("probability must lie in [0, 1], got " + std::to_string(value));
        }
    }

    [[nodiscard]] constexpr double value() const noexcept { return value_; }

    friend constexpr bool operator==(Probability, Probability) = default;

  private:
    double value_ = 0.0;
};

// Standard normal distribution.

/// Density (2 pi)^{-1/2} exp(-x^2 / 2).
double norm_pdf(double x) noexcept;

/// Distribution function; accepts +-infinity.
double norm_cdf(double x) noexcept;

/// Inverse of norm_cdf for p in (0, 1).
double norm_quantile(double p);

// Student t distribution with an integer number of degrees of freedom.

double t_cdf(double x, int df);
double t_quantile(double p, int df);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

}  // namespace gnormal
