#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/record.hpp"
#include "epsfbm/rng.hpp"

namespace epsfbm {

/// Levels beyond this are refused by the engine (memory/latency guard for
/// the FFT-based samplers; 2^26 grid points).
inline constexpr int kMaxEngineLevel = 26;

/// Seeding an exact sample at the starting level is refused beyond this.
inline constexpr int kMaxStartingLevel = 22;

/// Retry cap for the no-breaker rejection loop of the refinement stage.
inline constexpr long kMaxRefineRejections = 1000000;

struct BreakerLedger {
  std::vector<int> breaker_levels;  // strictly increasing tau_k sequence
  int starting_level = 0;           // N*(rho, delta)
  int last_breaker = 0;             // N; the starting level when no breaker was seen
  bool finalized = false;
};

struct EcmDiagnostics {
  int proposal_m = 0;
  std::size_t position = 0;  // sampled K
  bool upcross = true;       // sampled pi
  double statistic = 0.0;    // Theta / (R * znorm) on the indicator event
  double znorm = 1.0;        // max(1, proposal mass); 1 in the valid regime
  bool indicator = false;
  long breaker_count = 0;    // R_{n+m} in the candidate
};

struct EcmResult {
  bool accepted = false;
  /// Values on D_{n+m} \ D_n in time order; filled only on acceptance.
  std::vector<double> augmented;
  EcmDiagnostics diag;
};

/// Algorithm "ECM": exponential change of measure targeting a record
/// breaker at level n+m. Requires bce_check(path) to hold. The acceptance
/// indicator is a Bernoulli with success probability
/// P_n(tau = n+m) / (g_n(m) * znorm); znorm = 1 whenever the proposal mass
/// Z_n <= 1, i.e. whenever path.level >= starting_level(p).
EcmResult ecm(const DyadicPath& path, int m, const RecordParams& p,
              const ProposalDist& proposal, RngStream& rng);
EcmResult ecm(const DyadicPath& path, int m, const RecordParams& p, RngStream& rng);

struct SnrbResult {
  bool found = false;
  DyadicPath path;  // always extends the input exactly on shared grid points
  EcmDiagnostics diag;
  bool found_during_bce_refine = false;
};

/// Algorithm "SNRB": refines under the nominal measure until the BCE
/// condition holds (an incidental breaker ends the search early), then
/// proposes the next breaker level and runs the change of measure.
/// found=false means the record will never be broken again (tau = infinity).
/// proposal_cap truncates the proposal support (test instrumentation); 0
/// keeps the full support.
SnrbResult snrb(const DyadicPath& path, const RecordParams& p, RngStream& rng,
                int proposal_cap = 0);

struct SlrbResult {
  BreakerLedger ledger;
  DyadicPath path;
};

/// Algorithm "SLRB": seeds an exact sample at the starting level and
/// iterates snrb until the no-more-breakers claim is accepted.
SlrbResult slrb(const RecordParams& p, RngStream& rng);

struct HolderCertificate {
  double alpha = 0.0;
  double bound = 0.0;
};

struct EpsilonCertificate {
  int last_breaker = 0;   // N
  int truncation = 0;     // N(eps): the level the returned path lives on
  double sup_bound = 0.0; // valid sup-norm error bound, <= requested eps
  std::optional<HolderCertificate> holder;
  RecordParams params;
  int k_nu = 0;           // K(nu), surfaced for diagnostics
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

struct SfbmResult {
  DyadicPath path;
  BreakerLedger ledger;
  EpsilonCertificate cert;
};

/// Algorithm "SFBM": full epsilon-strong construction. When holder_alpha
/// is supplied (H > 1/2, alpha in (1/2,H), delta < H - alpha) the
/// certificate also carries the alpha-Hoelder bound.
SfbmResult sfbm(double eps, const RecordParams& p, RngStream& rng,
                std::optional<double> holder_alpha = std::nullopt);

/// Tolerance enforcement: extends the same realization to the level
/// required by eps_new, keeping all existing grid values. No-op when the
/// current certificate already meets eps_new.
void refine_tolerance(SfbmResult& result, double eps_new, RngStream& rng);

}  // namespace epsfbm
