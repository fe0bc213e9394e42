#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace prmcal {

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Inverse sigmoid; p is clamped away from {0,1} so the result stays finite.
inline double logit(double p, double eps = 1e-12) {
  p = std::clamp(p, eps, 1.0 - eps);
  return std::log(p / (1.0 - p));
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// k-th smallest value, 1-indexed. k must be in [1, n].
inline double kth_smallest(std::vector<double> xs, std::size_t k) {
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k - 1), xs.end());
  return xs[k - 1];
}

}  // namespace prmcal
