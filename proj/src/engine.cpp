#include "epsfbm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "epsfbm/bce.hpp"
#include "epsfbm/bridge.hpp"
#include "epsfbm/circulant.hpp"
#include "epsfbm/holder.hpp"

namespace epsfbm {

namespace {

// Candidate path at level n+m: known grid values, the alpha triple at
// position k, and the remaining points drawn from the nominal conditional law.
DyadicPath fill_candidate(const DyadicPath& path, int m, std::size_t k,
                          const Eigen::Vector3d& alpha, RngStream& rng) {
  const int fine_level = path.level + m;
  const std::size_t stride = std::size_t{1} << m;
  const std::size_t fine_count = DyadicPath::point_count(fine_level);
  const double fine_denom = static_cast<double>(std::size_t{1} << fine_level);

  std::vector<double> fine(fine_count, std::numeric_limits<double>::quiet_NaN());
  fine[0] = 0.0;
  for (std::size_t i = 0; i < path.values.size(); ++i)
    fine[i * stride] = path.values[i];
  for (int i = 0; i < 3; ++i) fine[2 * k - 2 + static_cast<std::size_t>(i)] = alpha(i);

  std::vector<double> ktimes, kvalues;
  for (std::size_t q = 0; q < fine_count; ++q) {
    if (std::isnan(fine[q]) || q == 0) continue;
    ktimes.push_back(static_cast<double>(q) / fine_denom);
    kvalues.push_back(fine[q]);
  }
  std::vector<double> new_times;
  std::vector<std::size_t> new_index;
  for (std::size_t q = 1; q < fine_count; ++q) {
    if (!std::isnan(fine[q])) continue;
    new_times.push_back(static_cast<double>(q) / fine_denom);
    new_index.push_back(q);
  }

  if (!new_index.empty()) {
    const DyadicPath uncond = gauss::sample_fbm_path(path.hurst, fine_level, rng);
    std::vector<double> uncond_known(ktimes.size()), uncond_new(new_times.size());
    for (std::size_t i = 0; i < ktimes.size(); ++i) {
      const std::size_t q = static_cast<std::size_t>(
          std::llround(ktimes[i] * fine_denom));
      uncond_known[i] = uncond.values[q];
    }
    for (std::size_t i = 0; i < new_index.size(); ++i)
      uncond_new[i] = uncond.values[new_index[i]];

    const gauss::BridgeConditioner cond(ktimes, path.hurst);
    const std::vector<double> vals =
        cond.apply(kvalues, uncond_known, new_times, uncond_new);
    for (std::size_t i = 0; i < new_index.size(); ++i) fine[new_index[i]] = vals[i];
  }
  return DyadicPath(path.hurst, fine_level, std::move(fine));
}

double beta_stat(const DyadicPath& fine, std::size_t k) {
  return 0.5 * fine.values[2 * k - 2] - fine.values[2 * k - 1] +
         0.5 * fine.values[2 * k];
}

}  // namespace

EcmResult ecm(const DyadicPath& path, int m, const RecordParams& p,
              const ProposalDist& proposal, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("ecm: level offset must be >= 1");
  const int n = path.level;
  const int fine_level = n + m;
  if (fine_level > kMaxEngineLevel)
    throw std::runtime_error("ecm: proposed level exceeds the engine cap");

  const LevelConditioner cond(path);

  // Position and crossing direction of the proposed breaker.
  const std::size_t positions = std::size_t{1} << (fine_level - 1);
  std::size_t k = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(positions)) + 1;
  k = std::min(k, positions);
  const bool upcross = rng.uniform01() <= 0.5;

  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
  cond.alpha_conditional(m, k, &mean, &cov);

  const double theta_abs = tilt_parameter(n, m, p);
  const double theta = upcross ? theta_abs : -theta_abs;
  const Eigen::Vector3d beta(0.5, -1.0, 0.5);
  const double mu = beta.dot(mean);
  const double sigma2 = std::max(0.0, beta.dot(cov * beta));

  // Tilted draw: mean shifted by theta * Sigma beta, covariance unchanged.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d eigs = es.eigenvalues();
  const double eig_floor = 1e-12 * std::max(1e-300, eigs.maxCoeff());
  for (int i = 0; i < 3; ++i) eigs(i) = eigs(i) > eig_floor ? std::sqrt(eigs(i)) : 0.0;
  Eigen::Vector3d z;
  for (int i = 0; i < 3; ++i) z(i) = rng.normal();
  Eigen::Vector3d alpha = mean + theta * (cov * beta) +
                          es.eigenvectors() * eigs.asDiagonal() * z;

  // Coordinates that already live on D_n must keep their exact values.
  const std::size_t stride = std::size_t{1} << m;
  for (int i = 0; i < 3; ++i) {
    const std::size_t q = 2 * k - 2 + static_cast<std::size_t>(i);
    if (q % stride == 0) alpha(i) = path.values[q / stride];
  }

  DyadicPath candidate = fill_candidate(path, m, k, alpha, rng);

  const double ell_fine = p.ell(fine_level);
  const double stat_k = beta_stat(candidate, k);

  long breaker_count = 0;
  for (std::size_t kk = 1; kk <= positions; ++kk)
    if (std::abs(beta_stat(candidate, kk)) >= p.rho * ell_fine) ++breaker_count;

  bool intermediate_clear = true;
  for (int j = 1; j < m && intermediate_clear; ++j)
    if (is_record_broken(candidate, n + j, p)) intermediate_clear = false;

  const bool sign_ok = upcross ? (stat_k >= p.rho * ell_fine)
                               : (stat_k <= -p.rho * ell_fine);
  const bool indicator = sign_ok && intermediate_clear;

  EcmResult result;
  result.diag.proposal_m = m;
  result.diag.position = k;
  result.diag.upcross = upcross;
  result.diag.znorm = proposal.znorm();
  result.diag.indicator = indicator;
  result.diag.breaker_count = breaker_count;

  double statistic = 0.0;
  if (indicator) {
    const double log_xi = theta * mu + 0.5 * theta * theta * sigma2;
    const double log_theta_weight =
        static_cast<double>(fine_level) * std::numbers::ln2_v<double> -
        std::log(proposal.pmf(m)) - theta * stat_k + log_xi;
    statistic = std::exp(log_theta_weight) /
                (static_cast<double>(breaker_count) * proposal.znorm());
    if (statistic > 1.0 + 1e-9)
      throw std::logic_error(
          "ecm: weighted likelihood ratio exceeds 1 (parameter or BCE violation)");
  }
  result.diag.statistic = statistic;

  const double u = rng.uniform01();
  result.accepted = indicator && u < statistic;
  if (result.accepted) {
    result.augmented.reserve(candidate.values.size() - path.values.size());
    for (std::size_t q = 1; q < candidate.values.size(); ++q)
      if (q % stride != 0) result.augmented.push_back(candidate.values[q]);
  }
  return result;
}

EcmResult ecm(const DyadicPath& path, int m, const RecordParams& p, RngStream& rng) {
  return ecm(path, m, p, ProposalDist(path.level, p), rng);
}

SnrbResult snrb(const DyadicPath& path, const RecordParams& p, RngStream& rng,
                int proposal_cap) {
  SnrbResult result;
  result.path = path;

  // Refine under the nominal measure until the BCE condition is satisfied.
  while (!bce_check(result.path, p)) {
    if (result.path.level + 1 > kMaxEngineLevel)
      throw std::runtime_error("snrb: BCE refinement exceeded the engine cap");
    result.path = gauss::refine_dyadic_block(result.path, result.path.level + 1, rng);
    if (is_record_broken(result.path, result.path.level, p)) {
      result.found = true;
      result.found_during_bce_refine = true;
      return result;
    }
  }

  const ProposalDist proposal(result.path.level, p, proposal_cap);
  const int m = proposal.sample(rng);
  EcmResult e = ecm(result.path, m, p, proposal, rng);
  result.diag = e.diag;
  if (!e.accepted) return result;  // tau = infinity

  const int fine_level = result.path.level + m;
  const std::size_t stride = std::size_t{1} << m;
  std::vector<double> fine(DyadicPath::point_count(fine_level));
  std::size_t aug = 0;
  for (std::size_t q = 0; q < fine.size(); ++q) {
    if (q % stride == 0)
      fine[q] = result.path.values[q / stride];
    else
      fine[q] = e.augmented[aug++];
  }
  result.path = DyadicPath(path.hurst, fine_level, std::move(fine));
  result.found = true;
  return result;
}

SlrbResult slrb(const RecordParams& p, RngStream& rng) {
  const int start = starting_level(p);
  if (start > kMaxStartingLevel)
    throw std::runtime_error(
        "slrb: starting level N*(rho,delta) is impractically deep; raise rho or delta");

  SlrbResult result;
  result.ledger.starting_level = start;
  result.path = gauss::sample_fbm_path(p.hurst, start, rng);

  for (;;) {
    SnrbResult step = snrb(result.path, p, rng);
    result.path = std::move(step.path);
    if (!step.found) break;
    result.ledger.breaker_levels.push_back(result.path.level);
  }
  result.ledger.last_breaker = result.ledger.breaker_levels.empty()
                                   ? start
                                   : result.ledger.breaker_levels.back();
  result.ledger.finalized = true;
  return result;
}

namespace {

// Conditional block refinement, rejecting candidates with a breaker at any
// level in (path.level, target].
DyadicPath refine_no_breakers(const DyadicPath& path, int target,
                              const RecordParams& p, RngStream& rng) {
  if (target > kMaxEngineLevel)
    throw std::runtime_error("refinement: target level exceeds the engine cap");
  for (long attempt = 0; attempt < kMaxRefineRejections; ++attempt) {
    DyadicPath candidate = gauss::refine_dyadic_block(path, target, rng);
    bool clean = true;
    for (int j = path.level + 1; j <= target && clean; ++j)
      if (is_record_broken(candidate, j, p)) clean = false;
    if (clean) return candidate;
  }
  throw std::runtime_error("refinement: rejection cap reached (parameters inconsistent)");
}

}  // namespace

SfbmResult sfbm(double eps, const RecordParams& p, RngStream& rng,
                std::optional<double> holder_alpha) {
  if (!(eps > 0.0)) throw std::domain_error("sfbm: eps must be positive");
  if (holder_alpha) {
    // Validate the Hoelder request up front, before any sampling.
    (void)holder_error_bound(0, *holder_alpha, p);
  }

  SfbmResult result;
  SlrbResult base = slrb(p, rng);
  result.ledger = std::move(base.ledger);
  result.path = std::move(base.path);

  const int n_eps = truncation_level(eps, result.ledger.last_breaker, p);
  const int target = std::max(n_eps, result.path.level);
  if (target > result.path.level)
    result.path = refine_no_breakers(result.path, target, p, rng);

  result.cert.last_breaker = result.ledger.last_breaker;
  result.cert.truncation = result.path.level;
  result.cert.sup_bound = uniform_error_bound(result.path.level, p);
  result.cert.params = p;
  result.cert.k_nu = K_of_nu(p.nu, p.delta);
  result.cert.seed = rng.seed();
  result.cert.stream_id = rng.stream_id();
  if (holder_alpha) {
    HolderCertificate hc;
    hc.alpha = *holder_alpha;
    hc.bound = fbm_holder_certificate(result.path, result.ledger, *holder_alpha, p);
    result.cert.holder = hc;
  }
  return result;
}

void refine_tolerance(SfbmResult& result, double eps_new, RngStream& rng) {
  if (!(eps_new > 0.0)) throw std::domain_error("refine_tolerance: eps must be positive");
  if (!result.ledger.finalized)
    throw std::invalid_argument("refine_tolerance: certificate not finalized");
  if (eps_new >= result.cert.sup_bound) return;  // already certified

  const RecordParams& p = result.cert.params;
  const int n_new = truncation_level(eps_new, result.cert.last_breaker, p);
  const int target = std::max(n_new, result.path.level);
  if (target > result.path.level)
    result.path = refine_no_breakers(result.path, target, p, rng);

  result.cert.truncation = result.path.level;
  result.cert.sup_bound = uniform_error_bound(result.path.level, p);
}

}  // namespace epsfbm
