#include "core/grid.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace gmis {

double Grid::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  if (f.size() != points.size() || g.size() != points.size()) {
    throw ShapeError("Grid::inner: field length does not match grid size");
  }
  return (weights.array() * f.array() * g.array()).sum();
}

Grid make_uniform_grid(int n, double a, double b) {
  if (n < 2) throw ParamError("make_uniform_grid: need at least 2 points");
  if (!(b > a)) throw ParamError("make_uniform_grid: need b > a");
  Grid grid;
  grid.points = Eigen::VectorXd::LinSpaced(n, a, b);
  const double h = (b - a) / static_cast<double>(n - 1);
  grid.weights = Eigen::VectorXd::Constant(n, h);
  grid.weights(0) = 0.5 * h;
  grid.weights(n - 1) = 0.5 * h;
  return grid;
}

void validate_grid(const Grid& grid) {
  if (grid.points.size() != grid.weights.size()) {
    throw ParamError("grid: points/weights length mismatch");
  }
  if (grid.points.size() < 1) throw ParamError("grid: empty");
  for (int i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid.points(i) < grid.points(i + 1))) {
      throw ParamError("grid: points must be strictly increasing");
    }
  }
  for (int i = 0; i < grid.size(); ++i) {
    if (!(grid.weights(i) > 0.0) || !std::isfinite(grid.weights(i))) {
      throw ParamError("grid: weights must be strictly positive");
    }
    if (!std::isfinite(grid.points(i))) {
      throw ParamError("grid: points must be finite");
    }
  }
}

double CovarianceKernel::operator()(double t, double s) const {
  const double r = std::abs(t - s);
  switch (kind) {
    case KernelKind::Exponential:
      return std::exp(-r / length_scale);
    case KernelKind::SquaredExponential:
      return std::exp(-r * r / (2.0 * length_scale * length_scale));
  }
  throw ParamError("kernel: unknown kind");
}

std::string kernel_kind_name(KernelKind kind) {
  return kind == KernelKind::Exponential ? "exponential"
                                         : "squared-exponential";
}

KernelKind kernel_kind_from_name(const std::string& name) {
  if (name == "exponential") return KernelKind::Exponential;
  if (name == "squared-exponential") return KernelKind::SquaredExponential;
  throw ParamError("kernel: unknown kind '" + name + "'");
}

}  // namespace gmis
