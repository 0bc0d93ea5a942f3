#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace fedsim {

// Flat ordered parameter block, the unit exchanged between clients and the
// server. Layout (segment order and sizes) is dictated by the ModelSpec that
// produced it; two vectors from the same spec are always layout-compatible.
struct ParamVector {
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values(n, fill) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool same_layout(const ParamVector& other) const { return values.size() == other.values.size(); }

  bool all_finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // this += scale * other
  void add_scaled(const ParamVector& other, double scale) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += scale * other.values[i];
  }

  double squared_distance(const ParamVector& other) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double d = values[i] - other.values[i];
      s += d * d;
    }
    return s;
  }

  double l2_distance(const ParamVector& other) const { return std::sqrt(squared_distance(other)); }

  bool operator==(const ParamVector& other) const { return values == other.values; }
};

}  // namespace fedsim
