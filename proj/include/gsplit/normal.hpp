#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace gsplit {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal upper tail, computed without cancellation for large x.
inline double normal_ccdf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse of normal_cdf on (0, 1).
inline double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Inverse of normal_ccdf: the x with P(Z >= x) = p.
inline double normal_upper_quantile(double p) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace gsplit
