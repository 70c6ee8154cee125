#pragma once

#include <Eigen/Core>
#include <string>

namespace gmis {

// One-dimensional quadrature grid: node coordinates plus weights for the
// weighted inner product <f, g>_w = sum_i w_i f_i g_i.
struct Grid {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.size()); }
  double length() const { return points(points.size() - 1) - points(0); }

  double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  double norm_sq(const Eigen::VectorXd& f) const { return inner(f, f); }
};

// Uniform grid on [a, b] with trapezoidal weights (half weight at the ends).
Grid make_uniform_grid(int n, double a, double b);

// Throws ParamError when points are not strictly increasing, weights are
// not positive, or the lengths disagree.
void validate_grid(const Grid& grid);

enum class KernelKind { Exponential, SquaredExponential };

// Stationary covariance kernel with unit variance on the diagonal.
//   Exponential:        C(t,s) = exp(-|t-s| / d)
//   SquaredExponential: C(t,s) = exp(-|t-s|^2 / (2 d^2))
struct CovarianceKernel {
  KernelKind kind = KernelKind::Exponential;
  double length_scale = 2.0;

  double operator()(double t, double s) const;
};

std::string kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(const std::string& name);

}  // namespace gmis
