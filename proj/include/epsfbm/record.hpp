#pragma once

#include <cstdint>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/rng.hpp"

namespace epsfbm {

/// Record-breaker parameters (H, delta, rho, nu, nu*) with the constraint
/// rho = 2(nu + nu*). The level-k breaker threshold is rho * 2^{-(H-delta)k}.
struct RecordParams {
  double hurst = 0.5;
  double delta = 0.1;
  double rho = 5.0;
  double nu = 1.25;
  double nustar = 1.25;

  RecordParams() = default;
  RecordParams(double hurst_index, double delta_, double nu_, double nustar_);

  /// nu = nu* = rho/4, preserving rho = 2(nu + nu*).
  static RecordParams from_rho(double hurst_index, double delta_, double rho_);

  double ell(int k) const;              // 2^{-(H-delta)k}
  double level_threshold(int k) const;  // rho * ell(k)
};

/// max_j |a^k_j - b^k_j|: the sup distance between the level-k and
/// level-(k-1) interpolations of the path.
double midpoint_deviation(const DyadicPath& path, int k);

/// Breaker test at level k; the boundary counts as broken (>=).
bool is_record_broken(const DyadicPath& path, int k, const RecordParams& p);

/// sup{n >= 1 : 4 sqrt(n) > nu 2^{delta n}}, 0 when the set is empty.
int K_of_nu(double nu, double delta);

/// Z_n = sum_{m>=1} 2^{n+m} exp{-rho^2/8 * 2^{2(n+m)delta}}, with the
/// geometric tail folded in once the terms decay.
double z_constant(int n, const RecordParams& p);

/// N*(rho, delta): the smallest n >= 1 with Z_n <= 1 (Z_n is strictly
/// decreasing). Independent of H.
int starting_level(const RecordParams& p);

/// The proposal distribution g_n(m) over the next-breaker level offset,
/// optionally truncated to m <= m_cap (test instrumentation). With the
/// default full support, truncation keeps mass >= 1 - 1e-15 of Z_n and the
/// last computed m absorbs the remainder. The Bernoulli produced by the
/// change of measure is deflated by znorm() = max(1, Z); Z <= 1 whenever
/// n >= N*(rho, delta), so the deflation is a no-op in the valid regime.
class ProposalDist {
 public:
  ProposalDist(int n, const RecordParams& p, int m_cap = 0);

  int sample(RngStream& rng) const;
  double pmf(int m) const;       // normalized over the truncated support
  double mass() const { return mass_; }
  double znorm() const { return mass_ > 1.0 ? mass_ : 1.0; }
  int max_m() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<double> weights_;  // absolute terms 2^{n+m} exp{...}
  std::vector<double> cdf_;      // cumulative, normalized
  double mass_ = 0.0;
};

/// Draws M from g_n(m) by inverse CDF.
int sample_g(int n, const RecordParams& p, RngStream& rng);

/// theta_n^+(m) = rho/2 * 2^{(m+n)(H+delta)}; the downward parameter is
/// its negation.
double tilt_parameter(int n, int m, const RecordParams& p);

/// rho 2^{-(H-delta)(n+1)} / (1 - 2^{-(H-delta)}): the sup-norm tail bound
/// valid on {no breakers beyond n}.
double uniform_error_bound(int n, const RecordParams& p);

/// rho 2^{2-alpha} 2^{-(H-alpha-delta)(n+1)} / (1 - 2^{-(H-alpha-delta)}).
/// Requires H > 1/2, alpha in (1/2, H), delta in (0, H-alpha); returns
/// +inf at the degenerate boundary delta = H - alpha.
double holder_error_bound(int n, double alpha, const RecordParams& p);

/// max{N, ceil(log2(rho / (eps (1 - 2^{-(H-delta)}))) / (H-delta))}.
int truncation_level(double eps, int last_breaker, const RecordParams& p);

}  // namespace epsfbm
