#include "epsfbm/record.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace epsfbm {

RecordParams::RecordParams(double hurst_index, double delta_, double nu_, double nustar_)
    : hurst(hurst_index), delta(delta_), rho(2.0 * (nu_ + nustar_)), nu(nu_), nustar(nustar_) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("RecordParams: Hurst index must lie in (0,1)");
  if (!(delta > 0.0 && delta < hurst))
    throw std::domain_error("RecordParams: delta must lie in (0,H)");
  if (!(nu > 0.0 && nustar > 0.0))
    throw std::domain_error("RecordParams: nu and nu* must be positive");
}

RecordParams RecordParams::from_rho(double hurst_index, double delta_, double rho_) {
  if (!(rho_ > 0.0)) throw std::domain_error("RecordParams: rho must be positive");
  return RecordParams(hurst_index, delta_, rho_ / 4.0, rho_ / 4.0);
}

double RecordParams::ell(int k) const {
  return std::exp2(-(hurst - delta) * static_cast<double>(k));
}

double RecordParams::level_threshold(int k) const { return rho * ell(k); }

double midpoint_deviation(const DyadicPath& path, int k) {
  if (k < 1 || k > path.level)
    throw std::out_of_range("midpoint_deviation: level out of range");
  const std::size_t stride = std::size_t{1} << (path.level - k);
  const std::size_t midpoints = std::size_t{1} << (k - 1);
  double dev = 0.0;
  for (std::size_t j = 0; j < midpoints; ++j) {
    const double left = path.values[2 * j * stride];
    const double mid = path.values[(2 * j + 1) * stride];
    const double right = path.values[(2 * j + 2) * stride];
    dev = std::max(dev, std::abs(mid - 0.5 * (left + right)));
  }
  return dev;
}

bool is_record_broken(const DyadicPath& path, int k, const RecordParams& p) {
  return midpoint_deviation(path, k) >= p.level_threshold(k);
}

int K_of_nu(double nu, double delta) {
  if (!(nu > 0.0 && delta > 0.0))
    throw std::domain_error("K_of_nu: nu and delta must be positive");
  // log f(n) = log(4 sqrt n) - delta n log 2 is decreasing once
  // n > 1/(2 delta ln 2); scan past that point for the last crossing.
  const double monotone_from = 1.0 / (2.0 * delta * std::numbers::ln2_v<double>);
  int last = 0;
  for (int n = 1;; ++n) {
    const double lhs = std::log(4.0 * std::sqrt(static_cast<double>(n)));
    const double rhs = std::log(nu) + delta * static_cast<double>(n) * std::numbers::ln2_v<double>;
    if (lhs > rhs) last = n;
    if (static_cast<double>(n) > monotone_from && lhs <= rhs) break;
  }
  return last;
}

namespace {

// log of the absolute proposal term 2^{n+m} exp{-rho^2/8 * 2^{2(n+m)delta}}.
double log_term(int j, const RecordParams& p) {
  return static_cast<double>(j) * std::numbers::ln2_v<double> -
         p.rho * p.rho / 8.0 * std::exp2(2.0 * static_cast<double>(j) * p.delta);
}

}  // namespace

double z_constant(int n, const RecordParams& p) {
  if (n < 0) throw std::domain_error("z_constant: negative level");
  double sum = 0.0;
  double prev = 0.0;
  for (int m = 1; m <= 100000; ++m) {
    const double lt = log_term(n + m, p);
    if (lt > 700.0) return std::numeric_limits<double>::infinity();
    const double term = std::exp(lt);
    sum += term;
    if (m > 1 && term < prev) {
      // Terms are log-concave in m, so the ratio keeps shrinking and the
      // remaining tail is below term * r / (1 - r).
      const double r = term / prev;
      const double tail = term * r / (1.0 - r);
      if (tail < 1e-18 * sum || term == 0.0) return sum + tail;
    }
    prev = term;
  }
  return sum;
}

int starting_level(const RecordParams& p) {
  for (int n = 1; n <= 400; ++n) {
    if (z_constant(n, p) <= 1.0) return n;
  }
  throw std::runtime_error("starting_level: no level with Z_n <= 1 below 400");
}

ProposalDist::ProposalDist(int n, const RecordParams& p, int m_cap) {
  const double z_full = z_constant(n, p);
  if (!std::isfinite(z_full))
    throw std::runtime_error("ProposalDist: Z_n overflows at these parameters");
  double cum = 0.0;
  double prev = 0.0;
  for (int m = 1; m <= 100000; ++m) {
    const double term = std::exp(log_term(n + m, p));
    weights_.push_back(term);
    cum += term;
    if (m_cap > 0 && m >= m_cap) break;
    if (m_cap == 0 && m > 1 && term < prev) {
      if (cum >= (1.0 - 1e-15) * z_full) break;
    }
    prev = term;
  }
  mass_ = cum;
  cdf_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i] / mass_;
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;  // remainder mass goes to the last computed m
}

int ProposalDist::sample(RngStream& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(it - cdf_.begin()) + 1;
}

double ProposalDist::pmf(int m) const {
  if (m < 1 || m > static_cast<int>(weights_.size())) return 0.0;
  return weights_[static_cast<std::size_t>(m - 1)] / mass_;
}

int sample_g(int n, const RecordParams& p, RngStream& rng) {
  return ProposalDist(n, p).sample(rng);
}

double tilt_parameter(int n, int m, const RecordParams& p) {
  if (n < 1 || m < 1) throw std::domain_error("tilt_parameter: n,m must be >= 1");
  return 0.5 * p.rho * std::exp2(static_cast<double>(n + m) * (p.hurst + p.delta));
}

double uniform_error_bound(int n, const RecordParams& p) {
  if (n < 0) throw std::domain_error("uniform_error_bound: negative level");
  const double gap = p.hurst - p.delta;
  return p.rho * std::exp2(-gap * static_cast<double>(n + 1)) / (1.0 - std::exp2(-gap));
}

double holder_error_bound(int n, double alpha, const RecordParams& p) {
  if (!(p.hurst > 0.5))
    throw std::domain_error("holder_error_bound: requires H > 1/2");
  if (!(alpha > 0.5 && alpha < p.hurst))
    throw std::domain_error("holder_error_bound: alpha must lie in (1/2,H)");
  const double gap = p.hurst - alpha - p.delta;
  if (gap < 0.0)
    throw std::domain_error("holder_error_bound: requires delta < H - alpha");
  if (gap == 0.0) return std::numeric_limits<double>::infinity();
  return p.rho * std::exp2(2.0 - alpha) * std::exp2(-gap * static_cast<double>(n + 1)) /
         (1.0 - std::exp2(-gap));
}

int truncation_level(double eps, int last_breaker, const RecordParams& p) {
  if (!(eps > 0.0)) throw std::domain_error("truncation_level: eps must be positive");
  const double gap = p.hurst - p.delta;
  const double raw = std::log2(p.rho / (eps * (1.0 - std::exp2(-gap)))) / gap;
  const int formula = static_cast<int>(std::ceil(raw));
  return std::max(last_breaker, std::max(formula, 0));
}

}  // namespace epsfbm
