#pragma once

#include <Eigen/Dense>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/record.hpp"

namespace epsfbm {

/// Shared conditional-Gaussian workspace for one path level: the covariance
/// of the nonzero grid values is factored once and reused for gamma_n and
/// for every conditional midpoint mean, which are covariance-row inner
/// products against the solved weight vector.
class LevelConditioner {
 public:
  explicit LevelConditioner(const DyadicPath& path);

  int level() const { return path_->level; }
  double gamma() const { return gamma_; }

  /// mu_n(m,k) = beta' E[alpha_n(m,k) | B_n], beta = (1/2,-1,1/2).
  double midpoint_mean(int m, std::size_t k) const;

  /// Conditional mean and covariance of alpha_n(m,k) =
  /// (B(t_{2k-2}), B(t_{2k-1}), B(t_{2k})) at level n+m given the path.
  void alpha_conditional(int m, std::size_t k, Eigen::Vector3d* mean,
                         Eigen::Matrix3d* cov) const;

 private:
  Eigen::Vector3d alpha_times(int m, std::size_t k) const;

  const DyadicPath* path_;
  Eigen::MatrixXd chol_;     // lower factor of Sigma_n, t=0 excluded
  Eigen::VectorXd weights_;  // Sigma_n^{-1} B_n
  double gamma_ = 0.0;
};

struct BceReport {
  bool satisfied = true;
  double gamma = 0.0;
  int max_offset = 1;  // M_n, the deepest offset that had to be checked
};

/// Algorithm "BCEC": checks |mu_n(m,k)| < rho/2 * 2^{-(n+m)(H-delta)} for
/// all 1 <= m <= M_n and 1 <= k <= 2^{n+m-1}, where
/// M_n = max{1, ceil((H-delta)^{-1} log2((2^{n+1}+2) gamma_n / rho) - n)}
/// caps the search (beyond it the bound of the conditional means decays
/// strictly faster than the threshold).
BceReport bce_report(const DyadicPath& path, const RecordParams& p);

inline bool bce_check(const DyadicPath& path, const RecordParams& p) {
  return bce_report(path, p).satisfied;
}

}  // namespace epsfbm
