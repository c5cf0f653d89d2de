#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "listid/error.hpp"

namespace listid::stats {

struct Interval {
  double lo;
  double hi;
};

/// Exact (Clopper-Pearson) binomial confidence interval.
inline Interval clopper_pearson(std::uint64_t successes, std::uint64_t trials, double alpha = 0.05) {
  if (trials == 0) return {0.0, 1.0};
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  const double lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1, alpha / 2);
  const double hi = successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1, n - k, 1 - alpha / 2);
  return {lo, hi};
}

struct TestResult {
  double statistic;
  double p_value;
};

/// Chi-square goodness of fit of a bit sequence against a fair coin (1 dof).
inline TestResult chi_square_bits(std::span<const std::uint8_t> bits) {
  if (bits.empty()) throw Error(ErrorCode::InsufficientStream, "no bits to test");
  double ones = 0;
  for (auto b : bits) ones += b;
  const double n = static_cast<double>(bits.size());
  const double expected = n / 2;
  const double zeros = n - ones;
  const double stat = ((ones - expected) * (ones - expected) + (zeros - expected) * (zeros - expected)) / expected;
  return {stat, boost::math::gamma_q(0.5, stat / 2)};
}

/// Wald-Wolfowitz runs test, normal approximation, two-sided.
inline TestResult runs_test(std::span<const std::uint8_t> bits) {
  double n1 = 0;
  for (auto b : bits) n1 += b;
  const double n = static_cast<double>(bits.size());
  const double n0 = n - n1;
  if (n1 == 0 || n0 == 0) return {0.0, 0.0};
  double runs = 1;
  for (std::size_t i = 1; i < bits.size(); ++i) runs += bits[i] != bits[i - 1];
  const double mean = 2 * n0 * n1 / n + 1;
  const double var = 2 * n0 * n1 * (2 * n0 * n1 - n) / (n * n * (n - 1));
  const double z = (runs - mean) / std::sqrt(var);
  return {z, std::erfc(std::fabs(z) / std::sqrt(2.0))};
}

struct LinearFit {
  double slope;
  double intercept;
  double r_squared;
};

/// Ordinary least squares of y on x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, my - slope * mx, r2};
}

}  // namespace listid::stats
