#pragma once

#include "epsfbm/dyadic.hpp"
#include "epsfbm/engine.hpp"
#include "epsfbm/record.hpp"

namespace epsfbm {

/// Upper bound on the alpha-Hoelder norm of the piecewise-linear path:
/// max(grid norm over all breakpoint pairs, 2 kappa Delta^{1-alpha}) with
/// kappa the maximal absolute segment slope. The two terms cover the
/// long-range pairs and the within/adjacent-segment pairs respectively.
double holder_norm_dyadic(const DyadicPath& path, double alpha);

/// ||B^H||_alpha <= holder_norm_dyadic(path at N, alpha)
///                   + holder_error_bound(N, alpha, p),
/// valid on the event certified by the finalized ledger.
double fbm_holder_certificate(const DyadicPath& path, const BreakerLedger& ledger,
                              double alpha, const RecordParams& p);

}  // namespace epsfbm
