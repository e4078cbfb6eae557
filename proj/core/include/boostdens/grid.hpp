#pragma once

#include "boostdens/common.hpp"

namespace boostdens {

/// Regular midpoint-rule grid over a box in one or two dimensions.
struct GridSpec {
  Vec lo;
  Vec hi;
  int points_per_axis = 200;

  /// Throws DimensionError for dim outside {1, 2} and RangeError for an empty
  /// box or fewer than 16 points per axis.
  void validate() const;

  int dim() const { return static_cast<int>(lo.size()); }
  double step(int axis) const { return (hi[axis] - lo[axis]) / points_per_axis; }
  double cell_volume() const;
  /// Cell midpoints, one per row; the last axis varies fastest.
  Matrix points() const;

  /// Box [-half_width, half_width]^dim.
  static GridSpec centered(int dim, double half_width, int points_per_axis);
  /// Bounding box of `centers` (one per row) expanded by `margin` on every side.
  static GridSpec around(const Matrix& centers, double margin, int points_per_axis);
};

}  // namespace boostdens
