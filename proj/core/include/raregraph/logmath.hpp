#pragma once

// Small numerically careful helpers for natural-log arithmetic on
// probabilities. All functions accept -inf (log 0).

#include <algorithm>
#include <cmath>
#include <limits>

namespace raregraph::logmath {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b))
inline double log_add(double a, double b) noexcept {
  if (a < b) std::swap(a, b);
  if (a == kNegInf) return kNegInf;
  if (a == kPosInf) return kPosInf;
  return a + std::log1p(std::exp(b - a));
}

// log(1 - exp(x)) for x <= 0. Returns -inf at x == 0.
inline double log1mexp(double x) noexcept {
  if (x == kNegInf) return 0.0;
  if (x >= 0.0) return kNegInf;
  // Maechler's switch point keeps full relative accuracy on both sides.
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

// log(1 + exp(x))
inline double softplus(double x) noexcept {
  if (x == kPosInf) return kPosInf;
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Probability of the positive state for a log-odds value.
inline double logistic(double log_odds) noexcept {
  if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
  const double e = std::exp(log_odds);
  return e / (1.0 + e);
}

}  // namespace raregraph::logmath
