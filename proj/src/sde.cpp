#include "epsfbm/sde.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "epsfbm/bridge.hpp"
#include "epsfbm/holder.hpp"

namespace epsfbm::sde {

Eigen::MatrixXd VectorFieldSpec::combined(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd f(dim, h());
  f.col(0) = drift(y);
  f.rightCols(driver_dim) = diffusion(y);
  return f;
}

void VectorFieldSpec::spot_check(RngStream& rng) const {
  if (dim < 1 || driver_dim < 1)
    throw std::domain_error("VectorFieldSpec: dimensions must be positive");
  const double step = 1e-5;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd y(dim);
    for (int i = 0; i < dim; ++i) y(i) = 4.0 * rng.uniform01() - 2.0;
    const Eigen::MatrixXd f = combined(y);
    if (f.cwiseAbs().maxCoeff() > f_bound + 1e-12)
      throw std::domain_error("VectorFieldSpec: |f| bound violated at a random state");
    for (int k = 0; k < dim; ++k) {
      Eigen::VectorXd hi = y, lo = y;
      hi(k) += step;
      lo(k) -= step;
      const Eigen::MatrixXd grad = (combined(hi) - combined(lo)) / (2.0 * step);
      if (grad.cwiseAbs().maxCoeff() > df_bound * (1.0 + 1e-3) + 1e-12)
        throw std::domain_error(
            "VectorFieldSpec: |grad f| bound violated at a random state");
    }
  }
}

namespace {

// K(2 alpha) = 1 + sum_{n>=1} n^{-2 alpha}, summed directly with the
// integral remainder N^{1-2 alpha}/(2 alpha - 1).
double k_two_alpha(double alpha) {
  const double expo = 2.0 * alpha;
  double sum = 0.0;
  const long n_terms = 1000000;
  for (long n = 1; n <= n_terms; ++n) sum += std::pow(static_cast<double>(n), -expo);
  const double tail =
      std::pow(static_cast<double>(n_terms), 1.0 - expo) / (expo - 1.0);
  return 1.0 + sum + tail;
}

}  // namespace

EulerConstants euler_constants(const VectorFieldSpec& field, double c_alpha,
                               double alpha) {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw std::domain_error("euler_constants: alpha must lie in (1/2,1)");
  if (!(c_alpha > 0.0))
    throw std::domain_error("euler_constants: Hoelder constant must be positive");

  EulerConstants ec;
  ec.alpha = alpha;
  ec.c_alpha = c_alpha;
  ec.k2a = k_two_alpha(alpha);

  const double d = static_cast<double>(field.dim);
  const double h = static_cast<double>(field.h());
  const double f = field.f_bound;
  const double df = field.df_bound;
  const double d2f = field.d2f_bound;

  if (f == 0.0) return ec;  // zero field: exact constant solution, G = 0

  // Covering count of the contraction argument; at least one interval.
  const double cover =
      std::max(1.0, std::ceil(std::pow(2.0 * d * h * c_alpha * ec.k2a * df, 1.0 / alpha)));
  ec.g1_star = 2.0 * h * std::pow(cover, 1.0 - alpha) * f * c_alpha;
  ec.g2_star = d * h * ec.k2a * df * c_alpha * ec.g1_star;

  if (df > 0.0) {
    ec.big_l = 4.0 / (1.0 - std::exp2(1.0 - 2.0 * alpha)) *
               (h * c_alpha) * (h * c_alpha) * df * f;
    ec.omega = std::pow(h * f * c_alpha / ec.big_l, 1.0 / alpha);
    ec.g1 = (ec.big_l + h * f * c_alpha) * (1.0 + 1.0 / ec.omega);
    ec.g2 = std::max((2.0 * std::pow(ec.omega, -alpha) + std::pow(ec.omega, -1.0 - alpha)) *
                         (ec.big_l + h * f * c_alpha),
                     ec.big_l);
  } else {
    // |grad f| = 0: L and omega degenerate to 0 and infinity; the Euler
    // iterates inherit the Hoelder bound of the signal directly.
    ec.big_l = 0.0;
    ec.omega = std::numeric_limits<double>::infinity();
    ec.g1 = h * f * c_alpha;
    ec.g2 = 0.0;
  }

  ec.zeta = h * ec.k2a * c_alpha * (d * df + d * d * d2f * (ec.g1_star + ec.g1));
  ec.upsilon = c_alpha * (d * d * h * ec.k2a * d2f * (ec.g1_star + ec.g1) + d * df);

  if (ec.zeta <= 0.0) {
    ec.recursion_length = 0;
    ec.g = ec.g1_star;
    return ec;
  }

  const double log_kstar = std::log(4.0 * ec.zeta) / alpha;
  if (log_kstar > std::log(4.5e15)) {
    ec.recursion_length = std::numeric_limits<long long>::max();
    ec.g = std::numeric_limits<double>::infinity();
    return ec;
  }
  ec.recursion_length =
      static_cast<long long>(std::ceil(std::pow(4.0 * ec.zeta, 1.0 / alpha)));

  // Gamma_k = 2(G2* + upsilon Upsilon_{k-1}), Upsilon_k = Gamma_k/(4 zeta)
  // + Upsilon_{k-1}: an affine recursion, so the terminal value has the
  // closed form b (a^k - 1)/(a - 1) with a = 1 + upsilon/(2 zeta),
  // b = G2*/(2 zeta).
  const double a = 1.0 + ec.upsilon / (2.0 * ec.zeta);
  const double b = ec.g2_star / (2.0 * ec.zeta);
  double upsilon_final;
  if (ec.upsilon == 0.0) {
    upsilon_final = b * static_cast<double>(ec.recursion_length);
  } else {
    const double log_ak = static_cast<double>(ec.recursion_length) * std::log(a);
    upsilon_final = log_ak > 700.0 ? std::numeric_limits<double>::infinity()
                                   : b * (std::exp(log_ak) - 1.0) / (a - 1.0);
  }

  const long long prefix = std::min<long long>(ec.recursion_length, 4096);
  double ups = 0.0;
  for (long long k = 1; k <= prefix; ++k) {
    const double gamma_k = 2.0 * (ec.g2_star + ec.upsilon * ups);
    ups = gamma_k / (4.0 * ec.zeta) + ups;
    ec.gamma_prefix.push_back(gamma_k);
    ec.upsilon_prefix.push_back(ups);
  }
  if (ec.recursion_length <= prefix) upsilon_final = ups;

  ec.g = upsilon_final + ec.g1_star;
  return ec;
}

std::vector<Eigen::VectorXd> euler_solve(const VectorFieldSpec& field,
                                         std::span<const DyadicPath> drivers,
                                         const Eigen::VectorXd& y0) {
  if (drivers.size() != static_cast<std::size_t>(field.driver_dim))
    throw std::invalid_argument("euler_solve: driver count mismatch");
  if (y0.size() != field.dim)
    throw std::invalid_argument("euler_solve: initial state dimension mismatch");
  const int level = drivers.empty() ? 0 : drivers[0].level;
  for (const DyadicPath& b : drivers)
    if (b.level != level)
      throw std::invalid_argument("euler_solve: drivers must share one level");

  const std::size_t steps = std::size_t{1} << level;
  const double mesh = 1.0 / static_cast<double>(steps);

  std::vector<Eigen::VectorXd> states;
  states.reserve(steps + 1);
  states.push_back(y0);
  Eigen::VectorXd dx(field.h());
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::VectorXd& y = states.back();
    dx(0) = mesh;
    for (int j = 0; j < field.driver_dim; ++j)
      dx(j + 1) = drivers[static_cast<std::size_t>(j)].values[k + 1] -
                  drivers[static_cast<std::size_t>(j)].values[k];
    Eigen::VectorXd next = y + field.combined(y) * dx;
    if (!next.allFinite()) {
      std::ostringstream msg;
      msg << "euler_solve: non-finite state at step " << k + 1;
      throw std::runtime_error(msg.str());
    }
    states.push_back(std::move(next));
  }
  return states;
}

SdeResult ssde(double eps, const VectorFieldSpec& field, const RecordParams& p,
               double alpha, const Eigen::VectorXd& y0, RngStream& rng) {
  if (!(eps > 0.0)) throw std::domain_error("ssde: eps must be positive");
  if (!(p.hurst > 0.5)) throw std::domain_error("ssde: requires H > 1/2");
  if (!(alpha > 0.5 && alpha < p.hurst))
    throw std::domain_error("ssde: alpha must lie in (1/2,H)");
  if (!(p.delta < p.hurst - alpha))
    throw std::domain_error("ssde: requires delta < H - alpha");

  SdeResult result;

  // Certified Hoelder bound per driving component.
  std::vector<SlrbResult> bases;
  double c_alpha = 1.0;  // the time component is 1-Hoelder-bounded by 1
  for (int i = 0; i < field.driver_dim; ++i) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(i));
    SlrbResult base = slrb(p, stream);
    const double ci =
        fbm_holder_certificate(base.path, base.ledger, alpha, p);
    c_alpha = std::max(c_alpha, ci);

    EpsilonCertificate cert;
    cert.last_breaker = base.ledger.last_breaker;
    cert.truncation = base.path.level;
    cert.sup_bound = uniform_error_bound(base.path.level, p);
    cert.params = p;
    cert.k_nu = K_of_nu(p.nu, p.delta);
    cert.seed = stream.seed();
    cert.stream_id = stream.stream_id();
    cert.holder = HolderCertificate{alpha, ci};
    result.driver_certs.push_back(cert);
    bases.push_back(std::move(base));
  }
  result.c_alpha = c_alpha;

  const EulerConstants ec = euler_constants(field, c_alpha, alpha);
  result.g_constant = ec.g;

  int level = 0;
  if (ec.g > 0.0) {
    const double raw = std::log2(ec.g / eps) / (2.0 * alpha - 1.0);
    level = std::max(0, static_cast<int>(std::ceil(raw)));
  }
  if (level > kMaxEngineLevel)
    throw std::runtime_error(
        "ssde: required discretization level exceeds the engine cap; "
        "the certified Hoelder constant makes G impractically large");
  result.level = level;
  result.eps = eps;

  std::vector<DyadicPath> drivers;
  for (int i = 0; i < field.driver_dim; ++i) {
    SlrbResult& base = bases[static_cast<std::size_t>(i)];
    RngStream stream = rng.substream(0x10000u + static_cast<std::uint64_t>(i));
    if (base.path.level < level) {
      for (long attempt = 0;; ++attempt) {
        if (attempt >= kMaxRefineRejections)
          throw std::runtime_error("ssde: refinement rejection cap reached");
        DyadicPath cand = gauss::refine_dyadic_block(base.path, level, stream);
        bool clean = true;
        for (int j = base.path.level + 1; j <= level && clean; ++j)
          if (is_record_broken(cand, j, p)) clean = false;
        if (clean) {
          drivers.push_back(std::move(cand));
          break;
        }
      }
    } else {
      drivers.push_back(base.path.level == level ? base.path
                                                 : base.path.restrict_to(level));
    }
  }

  result.states = euler_solve(field, drivers, y0);
  result.drivers = std::move(drivers);
  return result;
}

}  // namespace epsfbm::sde
