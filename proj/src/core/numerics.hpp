#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace gmis {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with the max shifted out.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

// log pdf of N(mean, var) at x; var must be positive.
inline double gaussian_log_pdf(double x, double mean, double var) {
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * d * d / var;
}

}  // namespace gmis
