#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epsfbm/circulant.hpp"
#include "epsfbm/mlmc.hpp"
#include "support/stats.hpp"

using namespace epsfbm;
using mlmc::FunctionalKind;
using mlmc::FunctionalSpec;

namespace {

FunctionalSpec supnorm_spec(double lipschitz = 1.0) {
  FunctionalSpec spec;
  spec.kind = FunctionalKind::kLipschitzSupNorm;
  spec.lipschitz = lipschitz;
  spec.evaluate = [lipschitz](const DyadicPath& path) {
    double m = 0.0;
    for (double v : path.values) m = std::max(m, std::abs(v));
    return lipschitz * m;
  };
  return spec;
}

FunctionalSpec terminal_spec() {
  FunctionalSpec spec;
  spec.kind = FunctionalKind::kLipschitzSupNorm;
  spec.lipschitz = 1.0;
  spec.evaluate = [](const DyadicPath& path) { return path.values.back(); };
  return spec;
}

}  // namespace

TEST_CASE("terminal functional has exactly zero level differences", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = terminal_spec();
  RngStream rng(81, 0);
  for (int k = 1; k <= 8; ++k)
    for (int rep = 0; rep < 20; ++rep) {
      RngStream stream = rng.substream(static_cast<std::uint64_t>(k * 100 + rep));
      REQUIRE(mlmc::level_difference(spec, k, p, stream) == 0.0);
    }
}

TEST_CASE("sup-norm level differences obey the variance bound", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = supnorm_spec();
  const double geo = 1.0 - std::exp2(-0.7);
  const double vb = std::pow(2.0 * 5.0 / geo, 2.0);
  RngStream rng(82, 0);
  for (int k = 2; k <= 6; ++k) {
    std::vector<double> ds(10000);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      RngStream stream = rng.substream(static_cast<std::uint64_t>(k) * 100000 + i);
      ds[i] = mlmc::level_difference(spec, k, p, stream);
    }
    const auto m = testsupport::moments(ds);
    REQUIRE(m.var <= vb * std::exp2(-2.0 * 0.7 * k));
  }
}

TEST_CASE("per-level variances decay geometrically", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = supnorm_spec();
  RngStream rng(83, 0);
  std::vector<double> lv;
  for (int k = 2; k <= 8; ++k) {
    std::vector<double> ds(4000);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      RngStream stream = rng.substream(static_cast<std::uint64_t>(k) * 1000000 + i);
      ds[i] = mlmc::level_difference(spec, k, p, stream);
    }
    lv.push_back(std::log2(testsupport::moments(ds).var));
  }
  std::vector<double> xs(lv.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  const double fitted_ratio = std::exp2(testsupport::regression_slope(xs, lv));
  REQUIRE(fitted_ratio <= std::exp2(-2.0 * 0.7) * 1.5);
}

TEST_CASE("allocate matches the bias rule and the variance budget", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = supnorm_spec();
  const double eps = 0.05;
  const mlmc::MlmcPlan plan = mlmc::allocate(eps, spec, p);

  // K is the smallest level with L * uniform_error_bound(K) <= eps/sqrt(2).
  REQUIRE(uniform_error_bound(plan.top_level, p) <= eps / std::sqrt(2.0));
  REQUIRE(uniform_error_bound(plan.top_level - 1, p) > eps / std::sqrt(2.0));

  double var_sum = 0.0;
  for (int k = 0; k <= plan.top_level; ++k) {
    const double bound_k = plan.var_constant * std::exp2(-2.0 * plan.decay * k);
    var_sum += bound_k / static_cast<double>(plan.replications[static_cast<std::size_t>(k)]);
  }
  REQUIRE(var_sum <= eps * eps / 2.0 + 1e-12);

  for (std::size_t k = 1; k < plan.replications.size(); ++k)
    REQUIRE(plan.replications[k] <= plan.replications[k - 1]);

  // Halving eps adds at most ceil(1/(H - delta)) levels.
  const mlmc::MlmcPlan half = mlmc::allocate(eps / 2.0, spec, p);
  REQUIRE(half.top_level - plan.top_level <=
          static_cast<int>(std::ceil(1.0 / (p.hurst - p.delta))));
}

TEST_CASE("mlmc recovers E[B(1)] = 0 and E[B(1)^2] = 1", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  RngStream rng(84, 0);

  FunctionalSpec sq;
  sq.kind = FunctionalKind::kLipschitzSupNorm;
  sq.lipschitz = 4.0;
  sq.evaluate = [](const DyadicPath& path) {
    const double v = path.values.back();
    return v * v;
  };
  const mlmc::MlmcPlan plan = mlmc::allocate(0.2, sq, p);
  const mlmc::MlmcEstimate est = mlmc::estimate(plan, sq, p, rng, 2);
  REQUIRE(std::abs(est.value - 1.0) <= 3.0 * est.std_error + 0.2 / std::sqrt(2.0));

  const FunctionalSpec lin = terminal_spec();
  const mlmc::MlmcPlan plan2 = mlmc::allocate(0.2, lin, p);
  RngStream rng2(85, 0);
  const mlmc::MlmcEstimate est2 = mlmc::estimate(plan2, lin, p, rng2, 2);
  REQUIRE(std::abs(est2.value) <= 3.0 * est2.std_error + 1e-6);
}

TEST_CASE("telescoping: mlmc equals naive Monte Carlo at matched K", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = supnorm_spec();

  mlmc::MlmcPlan plan;
  plan.top_level = 4;
  plan.eps = 0.1;
  plan.var_constant = 1.0;
  plan.decay = 0.7;
  plan.replications = {30000, 20000, 15000, 10000, 8000};
  RngStream rng(86, 0);
  const mlmc::MlmcEstimate est = mlmc::estimate(plan, spec, p, rng, 2);

  RngStream naive_rng(87, 0);
  std::vector<double> naive(40000);
  for (std::size_t i = 0; i < naive.size(); ++i) {
    RngStream stream = naive_rng.substream(i);
    naive[i] = spec.evaluate(gauss::sample_fbm_path(0.8, 4, stream));
  }
  const auto nm = testsupport::moments(naive);
  const double se = std::sqrt(nm.var / static_cast<double>(naive.size()) +
                              est.std_error * est.std_error);
  REQUIRE(std::abs(est.value - nm.mean) <= 3.0 * se);
}

TEST_CASE("estimate is identical for any job count", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = supnorm_spec();
  mlmc::MlmcPlan plan;
  plan.top_level = 3;
  plan.eps = 0.1;
  plan.var_constant = 1.0;
  plan.decay = 0.7;
  plan.replications = {4000, 3000, 2000, 1000};
  RngStream a(88, 0), b(88, 0);
  const mlmc::MlmcEstimate e1 = mlmc::estimate(plan, spec, p, a, 1);
  const mlmc::MlmcEstimate e2 = mlmc::estimate(plan, spec, p, b, 2);
  REQUIRE(e1.value == e2.value);
  REQUIRE(e1.std_error == e2.std_error);
  REQUIRE(e1.total_cost == e2.total_cost);
}

TEST_CASE("cost accounting counts simulated grid points", "[mlmc]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const FunctionalSpec spec = terminal_spec();
  mlmc::MlmcPlan plan;
  plan.top_level = 2;
  plan.eps = 0.1;
  plan.var_constant = 1.0;
  plan.decay = 0.7;
  plan.replications = {10, 10, 10};
  RngStream rng(89, 0);
  const mlmc::MlmcEstimate est = mlmc::estimate(plan, spec, p, rng, 1);
  REQUIRE(est.level_costs[0] == 10 * 2);
  REQUIRE(est.level_costs[1] == 10 * 3);
  REQUIRE(est.level_costs[2] == 10 * 5);
  REQUIRE(est.total_cost == 20 + 30 + 50);
}
