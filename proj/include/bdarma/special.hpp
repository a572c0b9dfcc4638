#pragma once

namespace bdarma::special {

/// Natural log of the gamma function for x > 0.
/// Relative accuracy better than 1e-13 across (0, 1e300).
double log_gamma(double x);

/// Digamma (psi) function for x > 0.
double digamma(double x);

/// Standard normal quantile (Acklam's rational approximation refined by one Halley step).
double normal_quantile(double p);

double normal_cdf(double x);

}  // namespace bdarma::special
