#pragma once

namespace overcount {

/// Natural log of the gamma function for x > 0.
///
/// Relative error is below 1e-12 on [1e-6, 1e6]. Near the roots at x = 1 and
/// x = 2 a Taylor series around the root is used so that small results keep
/// full relative precision. Throws std::domain_error for x <= 0 or NaN.
double log_gamma(double x);

/// Digamma function psi(x) = d/dx log_gamma(x) for x > 0.
/// Throws std::domain_error for x <= 0 or NaN.
double digamma(double x);

/// log Gamma(theta + y) - log Gamma(theta), the log rising factorial.
///
/// Stable for very large theta, where the plain difference of two log_gamma
/// values loses all significant digits. Requires theta > 0, y >= 0.
double log_rising(double theta, double y);

/// digamma(theta + y) - digamma(theta), stable for large theta.
double digamma_diff(double theta, double y);

}  // namespace overcount
