#include "epsfbm/bce.hpp"

#include <cmath>

#include "epsfbm/covariance.hpp"
#include "epsfbm/grid_gaussian.hpp"

namespace epsfbm {

LevelConditioner::LevelConditioner(const DyadicPath& path) : path_(&path) {
  const std::size_t m = std::size_t{1} << path.level;
  std::vector<double> times(m);
  for (std::size_t i = 0; i < m; ++i) times[i] = path.time_at(i + 1);
  const gauss::GridGaussian g = gauss::fbm_grid_gaussian(times, path.hurst);
  chol_ = gauss::detail::cholesky_with_jitter(g.cov);

  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) b(static_cast<Eigen::Index>(i)) = path.values[i + 1];
  weights_ = b;
  chol_.triangularView<Eigen::Lower>().solveInPlace(weights_);
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(weights_);
  gamma_ = weights_.size() > 0 ? weights_.cwiseAbs().maxCoeff() : 0.0;
}

Eigen::Vector3d LevelConditioner::alpha_times(int m, std::size_t k) const {
  const double fine = static_cast<double>(std::size_t{1} << (path_->level + m));
  Eigen::Vector3d t;
  t(0) = static_cast<double>(2 * k - 2) / fine;
  t(1) = static_cast<double>(2 * k - 1) / fine;
  t(2) = static_cast<double>(2 * k) / fine;
  return t;
}

double LevelConditioner::midpoint_mean(int m, std::size_t k) const {
  const Eigen::Vector3d t = alpha_times(m, k);
  const std::size_t n_pts = std::size_t{1} << path_->level;
  double mu = 0.0;
  for (std::size_t j = 0; j < n_pts; ++j) {
    const double tj = path_->time_at(j + 1);
    const double row = 0.5 * gauss::fbm_cov(t(0), tj, path_->hurst) -
                       gauss::fbm_cov(t(1), tj, path_->hurst) +
                       0.5 * gauss::fbm_cov(t(2), tj, path_->hurst);
    mu += row * weights_(static_cast<Eigen::Index>(j));
  }
  return mu;
}

void LevelConditioner::alpha_conditional(int m, std::size_t k, Eigen::Vector3d* mean,
                                         Eigen::Matrix3d* cov) const {
  const Eigen::Vector3d t = alpha_times(m, k);
  const std::size_t n_pts = std::size_t{1} << path_->level;
  const Eigen::Index n = static_cast<Eigen::Index>(n_pts);

  Eigen::MatrixXd cross(n, 3);  // Cov(B_n, alpha)
  for (Eigen::Index j = 0; j < n; ++j) {
    const double tj = path_->time_at(static_cast<std::size_t>(j) + 1);
    for (int i = 0; i < 3; ++i)
      cross(j, i) = gauss::fbm_cov(tj, t(i), path_->hurst);
  }

  *mean = cross.transpose() * weights_;

  Eigen::Matrix3d prior;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      prior(i, j) = gauss::fbm_cov(t(i), t(j), path_->hurst);

  Eigen::MatrixXd solved = cross;
  chol_.triangularView<Eigen::Lower>().solveInPlace(solved);
  *cov = prior - solved.transpose() * solved;
  *cov = (0.5 * (*cov + cov->transpose())).eval();
}

BceReport bce_report(const DyadicPath& path, const RecordParams& p) {
  const LevelConditioner cond(path);
  const int n = path.level;
  BceReport report;
  report.gamma = cond.gamma();

  int max_offset = 1;
  if (report.gamma > 0.0) {
    const double arg =
        (std::exp2(static_cast<double>(n + 1)) + 2.0) * report.gamma / p.rho;
    const double raw = std::log2(arg) / (p.hurst - p.delta) - static_cast<double>(n);
    max_offset = std::max(1, static_cast<int>(std::ceil(raw)));
  }
  report.max_offset = max_offset;

  for (int m = 1; m <= max_offset; ++m) {
    const std::size_t positions = std::size_t{1} << (n + m - 1);
    const double threshold = 0.5 * p.level_threshold(n + m);
    for (std::size_t k = 1; k <= positions; ++k) {
      if (std::abs(cond.midpoint_mean(m, k)) >= threshold) {
        report.satisfied = false;
        return report;
      }
    }
  }
  return report;
}

}  // namespace epsfbm
