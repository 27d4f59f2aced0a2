#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "epsfbm/rng.hpp"

namespace epsfbm::gauss {

/// A finite-dimensional Gaussian law attached to a set of time points.
struct GridGaussian {
  std::vector<double> points;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }

  /// Checks symmetry (1e-10 absolute) and near-PSD spectrum
  /// (eigenvalues >= -1e-10 * max diagonal). Throws on violation.
  void validate() const;
};

/// Builds the joint fBM law on the given (nonnegative, distinct) times.
GridGaussian fbm_grid_gaussian(std::span<const double> times, double hurst);

/// One draw from N(mean, cov) using a symmetric factorization with
/// diagonal jitter repair (1e-12 * trace, at most 3 doublings).
/// Throws std::runtime_error when the covariance cannot be repaired.
Eigen::VectorXd sample_mvn(const GridGaussian& g, RngStream& rng);

/// Law of the unobserved coordinates given observed ones. Degenerate
/// coordinates (zero-variance, e.g. the t=0 point of an fBM grid) are
/// excluded from the inversion, which realizes the generalized inverse.
GridGaussian conditional_gaussian(const GridGaussian& joint,
                                  std::span<const Eigen::Index> observed_indices,
                                  std::span<const double> observed_values);

namespace detail {
/// Cholesky with the jitter ladder shared by sample_mvn and the
/// conditioning code paths. Returns the lower factor.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov);
}  // namespace detail

}  // namespace epsfbm::gauss
