#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the envelope or sampler code paths under test.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Two-sided Kolmogorov-Smirnov statistic of `xs` against the CDF `cdf`.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic Kolmogorov p-value P(K > sqrt(n) D), with the usual
/// small-sample correction sqrt(n) + 0.12 + 0.11 / sqrt(n).
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double ks_test(const std::vector<double>& xs, const std::function<double(double)>& cdf) {
  return ks_pvalue(ks_statistic(xs, cdf), xs.size());
}

/// Pearson chi-square goodness of fit; returns the upper-tail p-value.
inline double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  int dof = -1;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++dof;
  }
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Adaptive Gauss-Kronrod on a finite interval, exp-sinh on half lines.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (std::isfinite(a) && std::isfinite(b)) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
  }
  boost::math::quadrature::exp_sinh<double> es;
  if (std::isfinite(a)) return es.integrate([&](double x) { return f(x); }, a, inf);
  return es.integrate([&](double x) { return f(-x); }, -b, inf);
}

/// Mixture density by direct long-double summation of the weighted normals.
inline long double mixture_density(const std::vector<double>& w, const std::vector<double>& mu,
                                   const std::vector<double>& var, long double x) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const long double d = x - mu[i];
    s += w[i] * std::exp(-d * d / (2.0L * var[i])) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L * var[i]);
  }
  return s;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
