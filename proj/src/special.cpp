#include "bdarma/special.hpp"

#include "bdarma/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace bdarma::special {

namespace {

constexpr double kShiftThreshold = 10.0;

// Stirling series: lgamma(x) = (x-1/2)ln x - x + ln(2pi)/2 + sum B_2k / (2k(2k-1) x^(2k-1))
double stirling_log_gamma(double x) {
    static constexpr std::array<double, 8> coef = {
        1.0 / 12.0,         -1.0 / 360.0,        1.0 / 1260.0,        -1.0 / 1680.0,
        1.0 / 1188.0,       -691.0 / 360360.0,   1.0 / 156.0,         -3617.0 / 122400.0,
    };
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 0.0;
    double power = inv;
    for (double c : coef) {
        series += c * power;
        power *= inv2;
    }
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// psi(x) = ln x - 1/(2x) - sum B_2k / (2k x^(2k))
double asymptotic_digamma(double x) {
    static constexpr std::array<double, 7> coef = {
        1.0 / 12.0,  -1.0 / 120.0,  1.0 / 252.0,   -1.0 / 240.0,
        1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
    };
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 0.0;
    double power = inv2;
    for (double c : coef) {
        series += c * power;
        power *= inv2;
    }
    return std::log(x) - 0.5 * inv - series;
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw DomainError("log_gamma requires x > 0");
    }
    if (std::isinf(x)) {
        return x;
    }
    if (x >= kShiftThreshold) {
        return stirling_log_gamma(x);
    }
    // Shift up with Gamma(x) = Gamma(x+n) / (x (x+1) ... (x+n-1)).
    double product = 1.0;
    double shifted = x;
    while (shifted < kShiftThreshold) {
        product *= shifted;
        shifted += 1.0;
    }
    return stirling_log_gamma(shifted) - std::log(product);
}

double digamma(double x) {
    if (!(x > 0.0)) {
        throw DomainError("digamma requires x > 0");
    }
    if (std::isinf(x)) {
        return x;
    }
    double correction = 0.0;
    while (x < kShiftThreshold) {
        correction -= 1.0 / x;
        x += 1.0;
    }
    return correction + asymptotic_digamma(x);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw DomainError("normal_quantile requires p in [0, 1]");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace bdarma::special
