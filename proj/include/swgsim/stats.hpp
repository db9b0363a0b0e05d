#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace swg {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  return std::sqrt(s2 / static_cast<double>(v.size() - 1));
}

// Relative standard deviation (coefficient of variation).
inline double rsd(std::span<const double> v) {
  const double m = mean(v);
  return m == 0.0 ? 0.0 : sample_stddev(v) / m;
}

struct KsResult {
  double d;
  double p_value;
};

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-9) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sample Kolmogorov-Smirnov test. Ties are handled by stepping both
// empirical CDFs across equal values before comparing, which keeps the
// statistic conservative for integer-valued samples.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n1 = a.size(), n2 = b.size();
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n1 && j < n2) {
    const double x = std::min(a[i], b[j]);
    while (i < n1 && a[i] <= x) ++i;
    while (j < n2 && b[j] <= x) ++j;
    const double f1 = static_cast<double>(i) / static_cast<double>(n1);
    const double f2 = static_cast<double>(j) / static_cast<double>(n2);
    d = std::max(d, std::fabs(f1 - f2));
  }
  const double ne = static_cast<double>(n1) * static_cast<double>(n2) /
                    static_cast<double>(n1 + n2);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return {d, kolmogorov_q(lambda)};
}

}  // namespace swg
