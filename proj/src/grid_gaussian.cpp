#include "epsfbm/grid_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "epsfbm/covariance.hpp"

namespace epsfbm::gauss {

void GridGaussian::validate() const {
  const Eigen::Index n = dim();
  if (static_cast<Eigen::Index>(points.size()) != n || cov.rows() != n || cov.cols() != n)
    throw std::invalid_argument("GridGaussian: dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-10)
        throw std::invalid_argument("GridGaussian: covariance not symmetric");
  if (n == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double max_diag = cov.diagonal().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(max_diag, 1.0))
    throw std::invalid_argument("GridGaussian: covariance not PSD");
}

GridGaussian fbm_grid_gaussian(std::span<const double> times, double hurst) {
  GridGaussian g;
  g.points.assign(times.begin(), times.end());
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  g.mean = Eigen::VectorXd::Zero(n);
  g.cov.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      g.cov(i, j) = g.cov(j, i) = fbm_cov(times[i], times[j], hurst);
  return g;
}

namespace detail {

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  const double trace = cov.trace();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  if (trace <= 0.0) return Eigen::MatrixXd::Zero(n, n);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  double jitter = 1e-12 * trace;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd repaired = cov;
    repaired.diagonal().array() += jitter;
    llt.compute(repaired);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter *= 2.0;
  }
  throw std::runtime_error(
      "cholesky_with_jitter: covariance remains ill-conditioned after jitter repair");
}

}  // namespace detail

Eigen::VectorXd sample_mvn(const GridGaussian& g, RngStream& rng) {
  const Eigen::Index n = g.dim();
  const Eigen::MatrixXd L = detail::cholesky_with_jitter(g.cov);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  return g.mean + L * z;
}

GridGaussian conditional_gaussian(const GridGaussian& joint,
                                  std::span<const Eigen::Index> observed_indices,
                                  std::span<const double> observed_values) {
  if (observed_indices.size() != observed_values.size())
    throw std::invalid_argument("conditional_gaussian: index/value count mismatch");
  if (observed_indices.empty()) return joint;

  const Eigen::Index n = joint.dim();
  std::vector<char> is_observed(static_cast<std::size_t>(n), 0);
  for (const Eigen::Index idx : observed_indices) {
    if (idx < 0 || idx >= n)
      throw std::out_of_range("conditional_gaussian: observed index out of range");
    if (is_observed[static_cast<std::size_t>(idx)])
      throw std::invalid_argument("conditional_gaussian: duplicate observed index");
    is_observed[static_cast<std::size_t>(idx)] = 1;
  }

  // Degenerate coordinates carry no information; drop them from the solve.
  std::vector<Eigen::Index> obs;
  std::vector<double> obs_vals;
  for (std::size_t i = 0; i < observed_indices.size(); ++i) {
    const Eigen::Index idx = observed_indices[i];
    if (joint.cov(idx, idx) > 1e-14) {
      obs.push_back(idx);
      obs_vals.push_back(observed_values[i]);
    }
  }
  std::vector<Eigen::Index> unobs;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!is_observed[static_cast<std::size_t>(i)]) unobs.push_back(i);

  const Eigen::Index p = static_cast<Eigen::Index>(unobs.size());
  const Eigen::Index q = static_cast<Eigen::Index>(obs.size());

  GridGaussian out;
  out.points.resize(static_cast<std::size_t>(p));
  out.mean.resize(p);
  Eigen::MatrixXd sigma11(p, p), sigma12(p, q), sigma22(q, q);
  Eigen::VectorXd mu2(q), y(q);
  for (Eigen::Index a = 0; a < p; ++a) {
    out.points[static_cast<std::size_t>(a)] = joint.points[static_cast<std::size_t>(unobs[a])];
    out.mean(a) = joint.mean(unobs[a]);
    for (Eigen::Index b = 0; b < p; ++b) sigma11(a, b) = joint.cov(unobs[a], unobs[b]);
    for (Eigen::Index b = 0; b < q; ++b) sigma12(a, b) = joint.cov(unobs[a], obs[b]);
  }
  for (Eigen::Index a = 0; a < q; ++a) {
    mu2(a) = joint.mean(obs[a]);
    y(a) = obs_vals[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < q; ++b) sigma22(a, b) = joint.cov(obs[a], obs[b]);
  }

  if (q == 0) {
    out.cov = sigma11;
    return out;
  }

  Eigen::MatrixXd L;
  try {
    L = detail::cholesky_with_jitter(sigma22);
  } catch (const std::runtime_error&) {
    throw std::runtime_error(
        "conditional_gaussian: reduced observation covariance is singular");
  }
  // gain = Sigma12 * Sigma22^{-1}, via two triangular solves.
  const Eigen::MatrixXd tmp =
      L.triangularView<Eigen::Lower>().solve(sigma12.transpose());
  const Eigen::MatrixXd gain =
      L.transpose().triangularView<Eigen::Upper>().solve(tmp).transpose();

  out.mean += gain * (y - mu2);
  out.cov = sigma11 - gain * sigma12.transpose();
  // Symmetrize away solve roundoff.
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace epsfbm::gauss
