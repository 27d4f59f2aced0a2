#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/record.hpp"
#include "epsfbm/rng.hpp"

namespace testsupport {

/// Independently coded fBM covariance (the oracle side of every
/// linear-algebra comparison below).
double cov_oracle(double s, double t, double hurst);

/// Dense conditional law by full matrix inversion on the oracle
/// covariance: no Cholesky, no degenerate-coordinate handling beyond
/// dropping exact-zero times.
struct DenseConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
DenseConditional conditional_oracle(std::span<const double> unobserved_times,
                                    std::span<const double> observed_times,
                                    std::span<const double> observed_values,
                                    double hurst);

/// Brute-force sup over a dense grid of |pl_a - pl_b| for two piecewise
/// linear paths (used against midpoint_deviation).
double dense_sup_difference(const epsfbm::DyadicPath& a, const epsfbm::DyadicPath& b,
                            std::size_t grid_points);

/// Brute-force alpha-Hoelder norm of a piecewise-linear path over all
/// pairs of a dense grid.
double dense_holder_norm(const epsfbm::DyadicPath& path, double alpha,
                         std::size_t grid_points);

/// Naive forward simulation of tau: refines a path one level at a time
/// under the nominal measure and returns the first breaker level in
/// (path.level, path.level + max_offset], or 0 when none occurs.
int forward_first_breaker(const epsfbm::DyadicPath& path,
                          const epsfbm::RecordParams& p, int max_offset,
                          epsfbm::RngStream& rng);

/// Direct 200-term summation of Z_n, no tail bound, no log-space tricks.
double z_oracle(int n, double rho, double delta);

}  // namespace testsupport
