#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lastexit/error.hpp"

namespace lastexit {

// Strictly increasing points in (0, 1] ending at 1. The value at s = 0 of
// every process simulated on a grid is implicitly 0.
class Grid1D {
 public:
  explicit Grid1D(std::vector<double> points) : points_(std::move(points)) {
    detail::require(!points_.empty(), "Grid1D: no points");
    double previous = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double p = points_[i];
      if (!(p > previous))
        throw InvalidArgument("Grid1D: point " + std::to_string(i) + " is not strictly above its predecessor");
      previous = p;
    }
    detail::require(points_.back() == 1.0, "Grid1D: last point must be 1");
  }

  // {1/n, 2/n, ..., 1}.
  static Grid1D uniform(std::size_t n) {
    detail::require(n >= 1, "Grid1D::uniform: n must be positive");
    std::vector<double> pts(n);
    for (std::size_t k = 0; k < n; ++k) pts[k] = static_cast<double>(k + 1) / static_cast<double>(n);
    pts.back() = 1.0;
    return Grid1D(std::move(pts));
  }

  static Grid1D dyadic(unsigned log2_points) {
    detail::require(log2_points <= 30, "Grid1D::dyadic: too many points");
    return uniform(std::size_t{1} << log2_points);
  }

  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const noexcept { return points_; }

  // Length of the cell ending at point i.
  double spacing(std::size_t i) const { return i == 0 ? points_[0] : points_[i] - points_[i - 1]; }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  std::vector<double> points_;
};

struct PathGrid {
  Grid1D grid;
  std::vector<double> values;
};

// Row-major: values[i * t_grid.size() + j] is the field at (s_i, t_j).
struct SheetGrid {
  Grid1D s_grid;
  Grid1D t_grid;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * t_grid.size() + j]; }
};

// Sup-norm over grid points. This is a lower bound for the supremum of the
// underlying continuous process.
inline double sup_abs(std::span<const double> values) {
  double best = 0.0;
  for (double v : values) best = std::max(best, std::abs(v));
  return best;
}

inline double sup_abs(const PathGrid& path) { return sup_abs(path.values); }
inline double sup_abs(const SheetGrid& sheet) { return sup_abs(sheet.values); }

}  // namespace lastexit
