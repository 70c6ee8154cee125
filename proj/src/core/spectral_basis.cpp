#include "core/spectral_basis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "core/errors.hpp"

namespace gmis {

int SpectralBasis::zero_modes() const {
  int n = 0;
  for (int k = full_dim - 1; k >= 0 && eigenvalues(k) == 0.0; --k) ++n;
  return n;
}

namespace {

// Orient each mode so that its first clearly nonzero entry is positive.
// Eigenvector signs are otherwise arbitrary and would flip between mesh
// resolutions, breaking matched-seed comparisons across refinements.
void fix_mode_signs(Eigen::MatrixXd& modes) {
  for (int k = 0; k < modes.cols(); ++k) {
    const double thresh = 1e-8 * modes.col(k).cwiseAbs().maxCoeff();
    for (int i = 0; i < modes.rows(); ++i) {
      const double v = modes(i, k);
      if (std::abs(v) > thresh) {
        if (v < 0.0) modes.col(k) = -modes.col(k);
        break;
      }
    }
  }
}

}  // namespace

SpectralBasis build_basis(const CovarianceKernel& kernel, const Grid& grid) {
  validate_grid(grid);
  const int n = grid.size();

  Eigen::MatrixXd kmat(n, n);
  for (int i = 0; i < n; ++i) {
    kmat(i, i) = kernel(grid.points(i), grid.points(i));
    for (int j = i + 1; j < n; ++j) {
      const double c = kernel(grid.points(i), grid.points(j));
      kmat(i, j) = c;
      kmat(j, i) = c;
    }
  }
  if (!kmat.allFinite()) {
    throw ParamError("build_basis: kernel produced non-finite entries");
  }

  const Eigen::VectorXd sqrt_w = grid.weights.cwiseSqrt();
  Eigen::MatrixXd weighted =
      sqrt_w.asDiagonal() * kmat * sqrt_w.asDiagonal();
  weighted = 0.5 * (weighted + weighted.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) {
    throw NumericError("build_basis: eigendecomposition failed");
  }

  SpectralBasis basis;
  basis.grid = grid;
  basis.full_dim = n;
  basis.eigenvalues.resize(n);
  basis.modes.resize(n, n);

  // Eigen returns ascending order; store descending.
  for (int k = 0; k < n; ++k) {
    basis.eigenvalues(k) = solver.eigenvalues()(n - 1 - k);
    basis.modes.col(k) =
        solver.eigenvectors().col(n - 1 - k).cwiseQuotient(sqrt_w);
  }

  const double clamp = 1e-12 * std::max(basis.eigenvalues(0), 0.0);
  for (int k = 0; k < n; ++k) {
    if (basis.eigenvalues(k) < clamp) basis.eigenvalues(k) = 0.0;
  }

  fix_mode_signs(basis.modes);
  return basis;
}

int truncation_dim(const SpectralBasis& basis, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ParamError("truncation_dim: epsilon must lie in (0, 1)");
  }
  if (basis.full_dim < 1) throw ParamError("truncation_dim: empty basis");
  const double alpha1 = basis.eigenvalues(0);
  if (alpha1 <= 0.0) return basis.full_dim;
  for (int k = 0; k < basis.full_dim; ++k) {
    if (basis.eigenvalues(k) / alpha1 < epsilon) return k + 1;
  }
  return basis.full_dim;
}

Eigen::VectorXd project(const SpectralBasis& basis,
                        const Eigen::VectorXd& field_values) {
  if (field_values.size() != basis.grid.points.size()) {
    throw ShapeError("project: field length does not match grid size");
  }
  return basis.modes.transpose() *
         basis.grid.weights.cwiseProduct(field_values);
}

Eigen::VectorXd synthesize(const SpectralBasis& basis,
                           const Eigen::VectorXd& coeffs) {
  if (coeffs.size() > basis.full_dim) {
    throw ShapeError("synthesize: more coefficients than basis modes");
  }
  return basis.modes.leftCols(coeffs.size()) * coeffs;
}

Eigen::VectorXd sample_prior(const SpectralBasis& basis, Rng& rng) {
  Eigen::VectorXd coeffs(basis.full_dim);
  for (int k = 0; k < basis.full_dim; ++k) {
    coeffs(k) = std::sqrt(basis.eigenvalues(k)) * rng.normal();
  }
  return coeffs;
}

double cameron_martin_norm_sq(const SpectralBasis& basis,
                              const Eigen::VectorXd& coeffs) {
  if (coeffs.size() > basis.full_dim) {
    throw ShapeError("cameron_martin_norm_sq: coefficient vector too long");
  }
  double sum = 0.0;
  for (int k = 0; k < coeffs.size(); ++k) {
    const double alpha = basis.eigenvalues(k);
    if (alpha > 0.0) {
      sum += coeffs(k) * coeffs(k) / alpha;
    } else if (coeffs(k) != 0.0) {
      throw NumericError(
          "cameron_martin_norm_sq: nonzero coefficient on a zero eigenvalue");
    }
  }
  return sum;
}

}  // namespace gmis
