#pragma once

#include <Eigen/Core>

#include "core/grid.hpp"
#include "core/rng.hpp"

namespace gmis {

// Discretized eigenpairs {alpha_k, e_k} of the prior covariance operator.
// The basis functions are orthonormal under the grid's weighted inner
// product, eigenvalues are sorted descending, and eigenvalues below
// 1e-12 * alpha_1 are clamped to exactly zero.
struct SpectralBasis {
  Grid grid;
  Eigen::VectorXd eigenvalues;  // alpha_k, length full_dim, descending
  Eigen::MatrixXd modes;        // grid.size() x full_dim; column k = e_k
  int full_dim = 0;

  // Number of trailing modes clamped to eigenvalue zero.
  int zero_modes() const;
};

// Nystrom-style discretization: eigendecompose W^{1/2} C W^{1/2} and map
// eigenvectors back to function values e_k = v_k / sqrt(w). Retains one
// eigenpair per grid point.
SpectralBasis build_basis(const CovarianceKernel& kernel, const Grid& grid);

// Smallest k (1-based) with alpha_k / alpha_1 < epsilon; full_dim when no
// eigenvalue qualifies. epsilon must lie in (0, 1).
int truncation_dim(const SpectralBasis& basis, double epsilon);

// coeffs[k] = <field, e_k>_w.
Eigen::VectorXd project(const SpectralBasis& basis,
                        const Eigen::VectorXd& field_values);

// field[i] = sum_k coeffs[k] e_k(t_i); accepts coeffs of length <= full_dim.
Eigen::VectorXd synthesize(const SpectralBasis& basis,
                           const Eigen::VectorXd& coeffs);

// Karhunen-Loeve draw from the prior: coeffs[k] = sqrt(alpha_k) * xi_k.
Eigen::VectorXd sample_prior(const SpectralBasis& basis, Rng& rng);

// sum_k coeffs[k]^2 / alpha_k over modes with alpha_k > 0. A nonzero
// coefficient on a zero eigenvalue throws NumericError: the element lies
// outside the Cameron-Martin space.
double cameron_martin_norm_sq(const SpectralBasis& basis,
                              const Eigen::VectorXd& coeffs);

}  // namespace gmis
