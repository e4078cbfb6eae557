#include "boostdens/grid.hpp"

namespace boostdens {

void GridSpec::validate() const {
  if (lo.size() != hi.size()) throw DimensionError("grid: lo and hi differ in dimension");
  if (lo.size() < 1 || lo.size() > 2)
    throw DimensionError("grid quadrature is limited to d <= 2 (got d = " + std::to_string(lo.size()) + ")");
  if (points_per_axis < 16) throw RangeError("grid: points_per_axis must be >= 16");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw RangeError("grid: lo must be below hi on every axis");
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= step(a);
  return v;
}

Matrix GridSpec::points() const {
  validate();
  const int n = points_per_axis;
  if (dim() == 1) {
    Matrix out(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = lo[0] + (i + 0.5) * step(0);
    return out;
  }
  Matrix out(static_cast<Eigen::Index>(n) * n, 2);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo[0] + (i + 0.5) * step(0);
    for (int j = 0; j < n; ++j, ++k) {
      out(k, 0) = x;
      out(k, 1) = lo[1] + (j + 0.5) * step(1);
    }
  }
  return out;
}

GridSpec GridSpec::centered(int dim, double half_width, int points_per_axis) {
  GridSpec g{Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width), points_per_axis};
  g.validate();
  return g;
}

GridSpec GridSpec::around(const Matrix& centers, double margin, int points_per_axis) {
  if (centers.rows() == 0) throw EmptySampleError("grid: no centers given");
  GridSpec g{centers.colwise().minCoeff().transpose().array() - margin,
             centers.colwise().maxCoeff().transpose().array() + margin, points_per_axis};
  g.validate();
  return g;
}

}  // namespace boostdens
