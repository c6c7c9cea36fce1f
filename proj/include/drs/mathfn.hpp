#pragma once

#include <cmath>

namespace drs {

// Overflow-safe logistic function: exp() is only ever taken of a
// non-positive argument, so sigmoid(1e6) == 1.0 instead of NaN.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) without underflow; used by cross-entropy losses.
inline double log_sigmoid(double z) {
  if (z >= 0.0) {
    return -std::log1p(std::exp(-z));
  }
  return z - std::log1p(std::exp(z));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace drs
