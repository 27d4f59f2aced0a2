#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epsfbm/bce.hpp"
#include "epsfbm/circulant.hpp"
#include "epsfbm/engine.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace epsfbm;

namespace {

// mu_n(m,k) by brute force: beta' Cov(alpha, B_n) Sigma_n^{-1} B_n with a
// full inversion on the oracle covariance.
double mu_oracle(const DyadicPath& path, int m, std::size_t k) {
  const std::size_t n_pts = std::size_t{1} << path.level;
  Eigen::MatrixXd sigma(n_pts, n_pts);
  Eigen::VectorXd b(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) {
    b(static_cast<Eigen::Index>(i)) = path.values[i + 1];
    for (std::size_t j = 0; j < n_pts; ++j)
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          testsupport::cov_oracle(path.time_at(i + 1), path.time_at(j + 1), path.hurst);
  }
  const double fine = static_cast<double>(std::size_t{1} << (path.level + m));
  Eigen::Matrix<double, 3, Eigen::Dynamic> cross(3, n_pts);
  for (int r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < n_pts; ++j)
      cross(r, static_cast<Eigen::Index>(j)) = testsupport::cov_oracle(
          static_cast<double>(2 * k - 2 + static_cast<std::size_t>(r)) / fine,
          path.time_at(j + 1), path.hurst);
  const Eigen::Vector3d beta(0.5, -1.0, 0.5);
  return (beta.transpose() * cross * sigma.fullPivLu().inverse() * b)(0);
}

}  // namespace

TEST_CASE("conditional midpoint means match the dense oracle", "[bce]") {
  for (double h : {0.45, 0.8}) {
    RngStream rng(41, static_cast<std::uint64_t>(h * 100));
    for (int level = 1; level <= 3; ++level) {
      const DyadicPath path = gauss::sample_fbm_path(h, level, rng);
      const LevelConditioner cond(path);
      for (int m = 1; m <= 3; ++m) {
        const std::size_t positions = std::size_t{1} << (level + m - 1);
        for (std::size_t k = 1; k <= positions; k += (positions > 8 ? 3 : 1)) {
          REQUIRE(cond.midpoint_mean(m, k) ==
                  Catch::Approx(mu_oracle(path, m, k)).margin(1e-10));
        }
      }
    }
  }
}

TEST_CASE("alpha conditional law matches the dense oracle", "[bce]") {
  RngStream rng(42, 0);
  const DyadicPath path = gauss::sample_fbm_path(0.8, 2, rng);
  const LevelConditioner cond(path);
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
  cond.alpha_conditional(2, 3, &mean, &cov);

  const double fine = 16.0;
  std::vector<double> alpha_times{4.0 / fine, 5.0 / fine, 6.0 / fine};
  std::vector<double> obs_t, obs_v;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    obs_t.push_back(path.time_at(i));
    obs_v.push_back(path.values[i]);
  }
  const auto oracle = testsupport::conditional_oracle(alpha_times, obs_t, obs_v, 0.8);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(mean(i) == Catch::Approx(oracle.mean(i)).margin(1e-10));
    for (int j = 0; j < 3; ++j)
      REQUIRE(cov(i, j) == Catch::Approx(oracle.cov(i, j)).margin(1e-10));
  }
}

TEST_CASE("BM has zero conditional bias, BCE always holds", "[bce]") {
  RngStream rng(43, 0);
  const RecordParams p = RecordParams::from_rho(0.5, 0.05, 5.0);
  for (int level = 1; level <= 4; ++level) {
    const DyadicPath path = gauss::sample_fbm_path(0.5, level, rng);
    const LevelConditioner cond(path);
    for (int m = 1; m <= 2; ++m)
      for (std::size_t k = 1; k <= (std::size_t{1} << (level + m - 1)); ++k)
        REQUIRE(std::abs(cond.midpoint_mean(m, k)) < 1e-10);
    REQUIRE(bce_check(path, p));
  }
}

TEST_CASE("a huge level-1 value violates the BCE condition", "[bce]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const DyadicPath path(0.8, 1, {0.0, 1000.0, 0.0});
  const BceReport report = bce_report(path, p);
  REQUIRE_FALSE(report.satisfied);
  // The direct mu computation confirms the threshold is exceeded at m=1.
  double worst = 0.0;
  for (std::size_t k = 1; k <= 2; ++k)
    worst = std::max(worst, std::abs(mu_oracle(path, 1, k)));
  REQUIRE(worst >= 0.5 * p.level_threshold(2));
}

TEST_CASE("beyond M_n the ceb bound guarantees the BCE inequality", "[bce]") {
  RngStream rng(44, 0);
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  for (int rep = 0; rep < 5; ++rep) {
    const DyadicPath path = gauss::sample_fbm_path(0.8, 3, rng);
    const BceReport report = bce_report(path, p);
    const LevelConditioner cond(path);
    const std::size_t n_pts = std::size_t{1} << path.level;
    for (int m = report.max_offset + 1; m <= report.max_offset + 3; ++m) {
      const std::size_t positions = std::size_t{1} << (path.level + m - 1);
      const double ceb = report.gamma * (static_cast<double>(n_pts) + 1.0) *
                         std::exp2(-2.0 * (path.level + m) * path.hurst);
      const double threshold = 0.5 * p.level_threshold(path.level + m);
      for (std::size_t k = 1; k <= positions; k += 7) {
        const double mu = cond.midpoint_mean(m, k);
        REQUIRE(std::abs(mu) <= ceb + 1e-12);
        REQUIRE(std::abs(mu) < threshold);
      }
    }
  }
}

TEST_CASE("ecm weighted ratio stays below one across the valid grid", "[ecm]") {
  for (double h : {0.45, 0.8}) {
    for (double delta : {0.1, 0.2}) {
      const RecordParams p = RecordParams::from_rho(h, delta, 5.0);
      REQUIRE(starting_level(p) == 1);
      RngStream rng(45, static_cast<std::uint64_t>(h * 1000 + delta * 10));
      const ProposalDist proposal(1, p);
      for (int rep = 0; rep < 2500; ++rep) {
        RngStream stream = rng.substream(static_cast<std::uint64_t>(rep));
        DyadicPath path = gauss::sample_fbm_path(h, 1, stream);
        if (!bce_check(path, p)) continue;
        const int m = proposal.sample(stream);
        const EcmResult r = ecm(path, m, p, proposal, stream);
        REQUIRE(r.diag.statistic <= 1.0 + 1e-9);
        REQUIRE(r.diag.znorm == 1.0);
      }
    }
  }
}

TEST_CASE("accepted ecm paths break the record exactly at the top level", "[ecm]") {
  // Sub-starting-level instance (znorm > 1) so acceptances are observable.
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 1.2);
  RngStream rng(46, 0);
  const int m_cap = 4;
  int accepted = 0;
  for (int rep = 0; rep < 40000 && accepted < 60; ++rep) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(rep));
    DyadicPath path = gauss::sample_fbm_path(0.8, 1, stream);
    if (!bce_check(path, p)) continue;
    const ProposalDist proposal(1, p, m_cap);
    const int m = proposal.sample(stream);
    const EcmResult r = ecm(path, m, p, proposal, stream);
    REQUIRE(r.diag.statistic <= 1.0 + 1e-9);
    if (!r.accepted) continue;
    ++accepted;

    // Rebuild the fine path from the augmented values.
    const std::size_t stride = std::size_t{1} << m;
    std::vector<double> fine(DyadicPath::point_count(1 + m));
    std::size_t aug = 0;
    for (std::size_t q = 0; q < fine.size(); ++q)
      fine[q] = (q % stride == 0) ? path.values[q / stride] : r.augmented[aug++];
    const DyadicPath out(0.8, 1 + m, std::move(fine));
    for (int j = 1; j < m; ++j) REQUIRE_FALSE(is_record_broken(out, 1 + j, p));
    REQUIRE(is_record_broken(out, 1 + m, p));
  }
  REQUIRE(accepted >= 30);
}

TEST_CASE("snrb acceptance law matches the forward oracle (moderate scale)",
          "[ecm][snrb]") {
  // Acceptance probability of the change of measure is deflated by
  // znorm = max(1, truncated proposal mass) below the starting level; the
  // comparison multiplies it back. Both legs condition on the BCE event.
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 1.2);
  const int m_cap = 4;
  const int trials = 30000;

  const double znorm = ProposalDist(1, p, m_cap).znorm();
  RngStream rng_snrb(47, 0), rng_fwd(48, 0);

  std::vector<long> found_at(static_cast<std::size_t>(m_cap) + 1, 0);
  long snrb_trials = 0;
  for (int rep = 0; rep < trials; ++rep) {
    RngStream stream = rng_snrb.substream(static_cast<std::uint64_t>(rep));
    DyadicPath path = gauss::sample_fbm_path(0.8, 1, stream);
    if (!bce_check(path, p)) continue;
    ++snrb_trials;
    const SnrbResult r = snrb(path, p, stream, m_cap);
    if (r.found && !r.found_during_bce_refine)
      ++found_at[static_cast<std::size_t>(r.path.level - 1)];
  }

  std::vector<long> fwd_at(static_cast<std::size_t>(m_cap) + 1, 0);
  long fwd_trials = 0;
  for (int rep = 0; rep < trials; ++rep) {
    RngStream stream = rng_fwd.substream(static_cast<std::uint64_t>(rep));
    DyadicPath path = gauss::sample_fbm_path(0.8, 1, stream);
    if (!bce_check(path, p)) continue;
    ++fwd_trials;
    const int tau = testsupport::forward_first_breaker(path, p, m_cap, stream);
    if (tau > 0) ++fwd_at[static_cast<std::size_t>(tau - 1)];
  }

  for (int m = 1; m <= m_cap; ++m) {
    const double p_snrb = znorm * static_cast<double>(found_at[static_cast<std::size_t>(m)]) /
                          static_cast<double>(snrb_trials);
    const double p_fwd = static_cast<double>(fwd_at[static_cast<std::size_t>(m)]) /
                         static_cast<double>(fwd_trials);
    const double se_snrb = znorm *
                           std::sqrt(p_snrb / znorm * (1 - p_snrb / znorm) /
                                     static_cast<double>(snrb_trials));
    const double se_fwd =
        std::sqrt(p_fwd * (1 - p_fwd) / static_cast<double>(fwd_trials));
    const double se = std::sqrt(se_snrb * se_snrb + se_fwd * se_fwd);
    INFO("m=" << m << " snrb=" << p_snrb << " fwd=" << p_fwd << " se=" << se);
    REQUIRE(std::abs(p_snrb - p_fwd) < 4.0 * se + 1e-12);
  }
}
