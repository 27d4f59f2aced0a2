#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/rng.hpp"

namespace epsfbm::gauss {

/// Sequential Gaussian-bridge conditioning for a fixed set of known times.
///
/// Precomputes the covariance recursion
///   r_k(s,t) = r_{k-1}(s,t) - r_{k-1}(s,t_k) r_{k-1}(t_k,t) / r_{k-1}(t_k,t_k)
/// over the known points; apply() then maps an unconditional joint sample
/// through the value recursion
///   X^k_t = X^{k-1}_t - r_{k-1}(t,t_k)/r_{k-1}(t_k,t_k) (X^{k-1}_{t_k} - y_k),
/// which yields a sample of the law conditional on X(t_k) = y_k. The map is
/// deterministic, so tests can probe its mean and covariance exactly.
class BridgeConditioner {
 public:
  BridgeConditioner(std::vector<double> known_times, double hurst);

  std::size_t known_count() const { return times_.size(); }

  /// known_values: the conditioning targets y_k.
  /// uncond_known / uncond_new: one unconditional joint sample evaluated at
  /// the known and new times. Returns the conditional values at new_times.
  std::vector<double> apply(std::span<const double> known_values,
                            std::span<const double> uncond_known,
                            std::span<const double> new_times,
                            std::span<const double> uncond_new) const;

 private:
  std::vector<double> times_;
  double hurst_;
  Eigen::MatrixXd reduced_;      // reduced_(k,j) = r_{k-1}(t_k, t_j), j >= k
  std::vector<double> pivots_;   // r_{k-1}(t_k, t_k)
};

/// Samples fBM at new_times conditional on the given known values.
/// Known times must be distinct, new times disjoint from them. A known
/// point at t=0 is stripped (B(0)=0 carries no information).
std::vector<double> bridge_refine(std::span<const double> known_times,
                                  std::span<const double> known_values,
                                  std::span<const double> new_times,
                                  double hurst, RngStream& rng);

/// Extends a dyadic path to `to_level` by conditional block sampling of
/// the missing grid points. Exact: distributionally identical to
/// conditional_gaussian + sample_mvn on the same grids. Uses the bridge
/// recursion for small conditioning sets and a cached-factorization
/// kriging update (the same map, telescoped) for large full-grid sets.
DyadicPath refine_dyadic_block(const DyadicPath& path, int to_level,
                               RngStream& rng);

}  // namespace epsfbm::gauss
