#pragma once

#include <cmath>

namespace hhlink {

// Overflow-free logistic function; exact for |u| far past +/-1e3.
inline double stable_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(sigmoid(u)) without forming the probability first.
inline double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

}  // namespace hhlink
