#include "epsfbm/mlmc.hpp"

#include <cmath>
#include <stdexcept>

#include "epsfbm/bridge.hpp"
#include "epsfbm/circulant.hpp"
#include "epsfbm/engine.hpp"
#include "epsfbm/parallel.hpp"

namespace epsfbm::mlmc {

namespace {

double case2_terminal(const FunctionalSpec& spec, const DyadicPath& driver) {
  const std::vector<Eigen::VectorXd> states =
      sde::euler_solve(*spec.field, std::span<const DyadicPath>(&driver, 1), spec.y0);
  return states.back()(spec.terminal_component);
}

double evaluate_difference(const FunctionalSpec& spec, const DyadicPath& path, int k) {
  if (spec.kind == FunctionalKind::kLipschitzSupNorm) {
    const double fine = spec.evaluate(path);
    if (k == 0) return fine;
    const double coarse = spec.evaluate(path.restrict_to(k - 1));
    const double diff = fine - coarse;
    // Coupling tightness: |D_k| <= L ||B_k - B_{k-1}||_inf per sample.
    if (std::abs(diff) >
        spec.lipschitz * midpoint_deviation(path, k) * (1.0 + 1e-9) + 1e-12)
      throw std::logic_error("level_difference: coupling bound violated");
    return diff;
  }
  if (spec.field == nullptr)
    throw std::invalid_argument("level_difference: Case II needs a field spec");
  if (spec.field->driver_dim != 1)
    throw std::invalid_argument("level_difference: Case II couples a scalar driver");
  const double fine = case2_terminal(spec, path);
  if (k == 0) return fine;
  return fine - case2_terminal(spec, path.restrict_to(k - 1));
}

DyadicPath sample_coupled_path(int k, const RecordParams& p, RngStream& rng,
                               bool certified, long long* breaker_cost) {
  if (!certified) return gauss::sample_fbm_path(p.hurst, k, rng);
  // Certified coupling: the record-breaker search pins the level beyond
  // which the threshold bounds hold, then the path extends breaker-free.
  SlrbResult base = slrb(p, rng);
  *breaker_cost += static_cast<long long>(base.path.values.size());
  if (base.path.level >= k) return base.path.restrict_to(k);
  for (long attempt = 0; attempt < kMaxRefineRejections; ++attempt) {
    DyadicPath cand = gauss::refine_dyadic_block(base.path, k, rng);
    bool clean = true;
    for (int j = base.path.level + 1; j <= k && clean; ++j)
      if (is_record_broken(cand, j, p)) clean = false;
    if (clean) return cand;
  }
  throw std::runtime_error("level_difference: certified refinement cap reached");
}

}  // namespace

double level_difference(const FunctionalSpec& spec, int k, const RecordParams& p,
                        RngStream& rng) {
  if (k < 0) throw std::domain_error("level_difference: negative level");
  long long ignored = 0;
  const DyadicPath path = sample_coupled_path(k, p, rng, false, &ignored);
  return evaluate_difference(spec, path, k);
}

MlmcPlan allocate(double eps, const FunctionalSpec& spec, const RecordParams& p) {
  if (!(eps > 0.0)) throw std::domain_error("allocate: eps must be positive");

  MlmcPlan plan;
  plan.eps = eps;
  const double bias_budget = eps / std::sqrt(2.0);

  if (spec.kind == FunctionalKind::kLipschitzSupNorm) {
    plan.decay = p.hurst - p.delta;
    const double geo = 1.0 - std::exp2(-plan.decay);
    plan.var_constant = std::pow(2.0 * spec.lipschitz * p.rho / geo, 2.0);
    int top = 0;
    while (spec.lipschitz * uniform_error_bound(top, p) > bias_budget) {
      ++top;
      if (top > 40) throw std::runtime_error("allocate: bias bound does not reach eps");
    }
    plan.top_level = top;
  } else {
    plan.decay = 2.0 * spec.alpha - 1.0;
    plan.var_constant = 4.0 * spec.euler_g;
    int top = 0;
    while (spec.euler_g * std::exp2(-plan.decay * top) > bias_budget) {
      ++top;
      if (top > 40) throw std::runtime_error("allocate: bias bound does not reach eps");
    }
    plan.top_level = top;
  }

  // sum_k bound(Var D_k) / r_k <= eps^2 / 2 with equal per-level budgets.
  const int count = plan.top_level + 1;
  plan.replications.resize(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double bound_k = plan.var_constant * std::exp2(-2.0 * plan.decay * k);
    const double r = 2.0 * bound_k * static_cast<double>(count) / (eps * eps);
    plan.replications[static_cast<std::size_t>(k)] =
        std::max<long>(1, static_cast<long>(std::ceil(r)));
  }
  return plan;
}

MlmcEstimate estimate(const MlmcPlan& plan, const FunctionalSpec& spec,
                      const RecordParams& p, RngStream& rng, int jobs,
                      bool certified) {
  if (plan.replications.size() != static_cast<std::size_t>(plan.top_level) + 1)
    throw std::invalid_argument("estimate: malformed plan");

  MlmcEstimate est;
  est.level_means.resize(plan.replications.size());
  est.level_vars.resize(plan.replications.size());
  est.level_costs.resize(plan.replications.size());

  for (int k = 0; k <= plan.top_level; ++k) {
    const long reps = plan.replications[static_cast<std::size_t>(k)];
    const long chunk_size = std::max<long>(1, reps / 512);
    const std::size_t chunks =
        static_cast<std::size_t>((reps + chunk_size - 1) / chunk_size);

    std::vector<double> chunk_sum(chunks, 0.0), chunk_sumsq(chunks, 0.0);
    std::vector<long long> chunk_breaker(chunks, 0);
    detail::parallel_for(chunks, jobs, [&](std::size_t c) {
      const long lo = static_cast<long>(c) * chunk_size;
      const long hi = std::min(reps, lo + chunk_size);
      double s = 0.0, s2 = 0.0;
      long long bcost = 0;
      for (long i = lo; i < hi; ++i) {
        RngStream stream = rng.substream(
            (static_cast<std::uint64_t>(k) << 40) + static_cast<std::uint64_t>(i));
        const DyadicPath path = sample_coupled_path(k, p, stream, certified, &bcost);
        const double d = evaluate_difference(spec, path, k);
        s += d;
        s2 += d * d;
      }
      chunk_sum[c] = s;
      chunk_sumsq[c] = s2;
      chunk_breaker[c] = bcost;
    });

    double sum = 0.0, sumsq = 0.0;
    long long bcost = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      sum += chunk_sum[c];
      sumsq += chunk_sumsq[c];
      bcost += chunk_breaker[c];
    }
    const double mean = sum / static_cast<double>(reps);
    const double var =
        reps > 1 ? std::max(0.0, (sumsq - static_cast<double>(reps) * mean * mean) /
                                     static_cast<double>(reps - 1))
                 : 0.0;
    est.level_means[static_cast<std::size_t>(k)] = mean;
    est.level_vars[static_cast<std::size_t>(k)] = var;
    est.level_costs[static_cast<std::size_t>(k)] =
        reps * static_cast<long long>(DyadicPath::point_count(k));
    est.breaker_search_cost += bcost;
    est.value += mean;
  }
  for (std::size_t k = 0; k < est.level_costs.size(); ++k)
    est.total_cost += est.level_costs[k];
  double se2 = 0.0;
  for (std::size_t k = 0; k < est.level_vars.size(); ++k)
    se2 += est.level_vars[k] / static_cast<double>(plan.replications[k]);
  est.std_error = std::sqrt(se2);
  return est;
}

}  // namespace epsfbm::mlmc
