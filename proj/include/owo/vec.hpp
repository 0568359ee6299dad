#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace owo {

// Dense double vector. Dimensions here are tiny (d <= 4, K small), so a plain
// std::vector beats any linear-algebra dependency.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool has_nan(const Vec& a) {
  for (double v : a)
    if (std::isnan(v)) return true;
  return false;
}

}  // namespace owo
