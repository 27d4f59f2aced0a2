#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/record.hpp"
#include "epsfbm/rng.hpp"
#include "epsfbm/sde.hpp"

namespace epsfbm::mlmc {

enum class FunctionalKind {
  kLipschitzSupNorm,  // Case I: g Lipschitz w.r.t. the sup norm
  kSdeTerminal,       // Case II: terminal value of an fBM-driven SDE
};

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::kLipschitzSupNorm;

  // Case I
  std::function<double(const DyadicPath&)> evaluate;
  double lipschitz = 1.0;

  // Case II (scalar driver)
  const sde::VectorFieldSpec* field = nullptr;
  double alpha = 0.75;
  double euler_g = 1.0;  // Euler error constant used in the bias/variance bounds
  Eigen::VectorXd y0;
  int terminal_component = 0;
};

struct MlmcPlan {
  int top_level = 0;               // K
  std::vector<long> replications;  // r_k, k = 0..K
  double eps = 0.0;
  double var_constant = 0.0;   // Vb: bound(Var D_k) = Vb Delta_k^(2 decay)
  double decay = 0.0;          // H - delta (Case I), 2 alpha - 1 (Case II)
};

struct MlmcEstimate {
  double value = 0.0;
  std::vector<double> level_means;
  std::vector<double> level_vars;
  std::vector<long long> level_costs;  // simulated grid points
  long long total_cost = 0;
  long long breaker_search_cost = 0;  // certified mode only, reported separately
  double std_error = 0.0;
};

/// One coupled level difference D_k = g(B_k) - g(B_{k-1}) (Case I) or the
/// Euler terminal difference at levels k, k-1 (Case II), both levels
/// evaluated on the same exact path. k = 0 returns g at level 0
/// (g(B_{-1}) = 0 by convention).
double level_difference(const FunctionalSpec& spec, int k, const RecordParams& p,
                        RngStream& rng);

/// Chooses K from the bias bound (<= eps/sqrt(2)) and r_k from the
/// variance bounds so that sum_k bound(Var D_k)/r_k <= eps^2/2.
MlmcPlan allocate(double eps, const FunctionalSpec& spec, const RecordParams& p);

/// Runs the estimator. Replications fan out over `jobs` threads on
/// independent substreams; partial sums merge in a fixed chunk order, so
/// the result is identical for any job count. `certified` additionally
/// runs the record-breaker search per replication and enforces the
/// no-breaker coupling; its cost is reported separately.
MlmcEstimate estimate(const MlmcPlan& plan, const FunctionalSpec& spec,
                      const RecordParams& p, RngStream& rng, int jobs = 1,
                      bool certified = false);

}  // namespace epsfbm::mlmc
