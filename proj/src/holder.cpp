#include "epsfbm/holder.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace epsfbm {

double holder_norm_dyadic(const DyadicPath& path, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("holder_norm_dyadic: alpha must lie in (0,1)");
  const std::size_t n = path.values.size();
  if (n < 2) return 0.0;
  const double mesh = path.mesh();

  // (d * mesh)^alpha for every possible index gap.
  std::vector<double> gap_pow(n);
  for (std::size_t d = 1; d < n; ++d)
    gap_pow[d] = std::pow(static_cast<double>(d) * mesh, alpha);

  double grid_norm = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double ratio = std::abs(path.values[j] - path.values[i]) / gap_pow[j - i];
      if (ratio > grid_norm) grid_norm = ratio;
    }

  double max_step = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    max_step = std::max(max_step, std::abs(path.values[i + 1] - path.values[i]));
  const double kappa = max_step / mesh;
  const double segment_bound = 2.0 * kappa * std::pow(mesh, 1.0 - alpha);

  return std::max(grid_norm, segment_bound);
}

double fbm_holder_certificate(const DyadicPath& path, const BreakerLedger& ledger,
                              double alpha, const RecordParams& p) {
  if (!ledger.finalized)
    throw std::invalid_argument("fbm_holder_certificate: ledger not finalized");
  if (path.level < ledger.last_breaker)
    throw std::invalid_argument("fbm_holder_certificate: path below the breaker level");
  const double tail = holder_error_bound(ledger.last_breaker, alpha, p);
  const DyadicPath at_n = path.restrict_to(ledger.last_breaker);
  return holder_norm_dyadic(at_n, alpha) + tail;
}

}  // namespace epsfbm
