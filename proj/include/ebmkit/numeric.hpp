#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace ebmkit {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
double sample_std(std::span<const double> xs);

/// Pearson correlation. Returns NaN when either side has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace ebmkit
