#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace ncrl {

/// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
  if (x > 0.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sigmoid(double x) { return -softplus(-x); }

/// log(p / (1 - p)); p must lie strictly inside (0, 1).
inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("logit: probability " + std::to_string(p) +
                                " outside (0, 1)");
  }
  return std::log(p) - std::log1p(-p);
}

inline void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument(std::string(what) + ": non-finite value at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace ncrl
