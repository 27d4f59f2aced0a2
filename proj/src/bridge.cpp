#include "epsfbm/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "epsfbm/circulant.hpp"
#include "epsfbm/covariance.hpp"
#include "epsfbm/grid_gaussian.hpp"

namespace epsfbm::gauss {

namespace {

constexpr double kDegenerateVariance = 1e-14;

// Conditioning sets at or above this size take the cached-factorization
// path in refine_dyadic_block.
constexpr int kKrigingMinLevel = 7;

// (d / 2^level)^(2H) for d = 0..2^level; shared by the kriging rows.
const std::vector<double>& pow_table(double hurst, int level) {
  static std::map<std::pair<double, int>, std::unique_ptr<std::vector<double>>> cache;
  static std::mutex cache_mutex;
  const auto key = std::make_pair(hurst, level);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  const std::size_t n = std::size_t{1} << level;
  auto table = std::make_unique<std::vector<double>>(n + 1);
  const double h2 = 2.0 * hurst;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d <= n; ++d)
    (*table)[d] = std::pow(static_cast<double>(d) * inv, h2);
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto [it, inserted] = cache.emplace(key, std::move(table));
  return *it->second;
}

// Cholesky factor of the fBM covariance on {i/2^level, i=1..2^level}.
const Eigen::MatrixXd& grid_chol(double hurst, int level) {
  static std::map<std::pair<double, int>, std::unique_ptr<Eigen::MatrixXd>> cache;
  static std::mutex cache_mutex;
  const auto key = std::make_pair(hurst, level);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  const std::size_t m = std::size_t{1} << level;
  std::vector<double> times(m);
  for (std::size_t i = 0; i < m; ++i)
    times[i] = static_cast<double>(i + 1) / static_cast<double>(m);
  const GridGaussian g = fbm_grid_gaussian(times, hurst);
  auto factor = std::make_unique<Eigen::MatrixXd>(detail::cholesky_with_jitter(g.cov));
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto [it, inserted] = cache.emplace(key, std::move(factor));
  return *it->second;
}

}  // namespace

BridgeConditioner::BridgeConditioner(std::vector<double> known_times, double hurst)
    : times_(std::move(known_times)), hurst_(hurst) {
  const Eigen::Index n = static_cast<Eigen::Index>(times_.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (times_[i] == times_[j])
        throw std::invalid_argument("BridgeConditioner: known times must be distinct");

  reduced_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      reduced_(i, j) = fbm_cov(times_[i], times_[j], hurst_);

  pivots_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double d = reduced_(k, k);
    if (d < kDegenerateVariance)
      throw std::runtime_error("BridgeConditioner: degenerate conditioning pivot");
    pivots_[static_cast<std::size_t>(k)] = d;
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        reduced_(i, j) -= reduced_(k, i) * reduced_(k, j) / d;
  }
}

std::vector<double> BridgeConditioner::apply(std::span<const double> known_values,
                                             std::span<const double> uncond_known,
                                             std::span<const double> new_times,
                                             std::span<const double> uncond_new) const {
  const std::size_t n = times_.size();
  if (known_values.size() != n || uncond_known.size() != n)
    throw std::invalid_argument("BridgeConditioner::apply: known size mismatch");
  if (new_times.size() != uncond_new.size())
    throw std::invalid_argument("BridgeConditioner::apply: new size mismatch");

  // Value recursion over the known points.
  std::vector<double> e(uncond_known.begin(), uncond_known.end());
  std::vector<double> coeff(n);
  for (std::size_t k = 0; k < n; ++k) {
    coeff[k] = (e[k] - known_values[k]) / pivots_[k];
    for (std::size_t j = k + 1; j < n; ++j)
      e[j] -= reduced_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * coeff[k];
  }

  std::vector<double> out(new_times.size());
  std::vector<double> w(n);
  for (std::size_t p = 0; p < new_times.size(); ++p) {
    const double t = new_times[p];
    for (std::size_t j = 0; j < n; ++j) w[j] = fbm_cov(t, times_[j], hurst_);
    double v = uncond_new[p];
    for (std::size_t k = 0; k < n; ++k) {
      v -= w[k] * coeff[k];
      const double scale = w[k] / pivots_[k];
      for (std::size_t j = k + 1; j < n; ++j)
        w[j] -= reduced_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * scale;
    }
    out[p] = v;
  }
  return out;
}

namespace {

// Detects whether the union of times equals {i/2^L, i=1..2^L} for some L,
// in which case the unconditional joint draw can use the grid samplers.
bool is_full_dyadic_grid(const std::vector<double>& sorted_times, int* level_out) {
  const std::size_t m = sorted_times.size();
  if (m == 0 || (m & (m - 1)) != 0) return false;
  int level = 0;
  while ((std::size_t{1} << level) < m) ++level;
  for (std::size_t i = 0; i < m; ++i) {
    const double expected = static_cast<double>(i + 1) / static_cast<double>(m);
    if (std::abs(sorted_times[i] - expected) > 1e-12) return false;
  }
  *level_out = level;
  return true;
}

}  // namespace

std::vector<double> bridge_refine(std::span<const double> known_times,
                                  std::span<const double> known_values,
                                  std::span<const double> new_times,
                                  double hurst, RngStream& rng) {
  if (known_times.size() != known_values.size())
    throw std::invalid_argument("bridge_refine: known size mismatch");
  for (const double t : new_times)
    for (const double s : known_times)
      if (t == s) throw std::invalid_argument("bridge_refine: new time collides with known");

  // B(0) = 0 identically; it conditions nothing.
  std::vector<double> ktimes, kvalues;
  ktimes.reserve(known_times.size());
  for (std::size_t i = 0; i < known_times.size(); ++i) {
    if (known_times[i] <= 0.0) continue;
    ktimes.push_back(known_times[i]);
    kvalues.push_back(known_values[i]);
  }

  if (ktimes.empty()) {
    // Unconditional sampling.
    std::vector<double> sorted(new_times.begin(), new_times.end());
    std::sort(sorted.begin(), sorted.end());
    int level = 0;
    std::vector<double> sample;
    if (is_full_dyadic_grid(sorted, &level)) {
      sample = circulant_fbm_grid(sorted.size(), hurst, rng);
    } else {
      if (sorted.size() > 8192)
        throw std::invalid_argument("bridge_refine: non-grid point set too large");
      const GridGaussian g = fbm_grid_gaussian(sorted, hurst);
      const Eigen::VectorXd x = sample_mvn(g, rng);
      sample.assign(x.data(), x.data() + x.size());
    }
    std::vector<double> out(new_times.size());
    for (std::size_t i = 0; i < new_times.size(); ++i) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), new_times[i]);
      out[i] = sample[static_cast<std::size_t>(it - sorted.begin())];
    }
    return out;
  }

  // One unconditional joint sample over knowns + news.
  std::vector<double> all_times = ktimes;
  all_times.insert(all_times.end(), new_times.begin(), new_times.end());
  std::vector<double> sorted = all_times;
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> sorted_sample;
  int level = 0;
  if (is_full_dyadic_grid(sorted, &level)) {
    sorted_sample = circulant_fbm_grid(sorted.size(), hurst, rng);
  } else {
    if (sorted.size() > 8192)
      throw std::invalid_argument("bridge_refine: non-grid point set too large");
    const GridGaussian g = fbm_grid_gaussian(sorted, hurst);
    const Eigen::VectorXd x = sample_mvn(g, rng);
    sorted_sample.assign(x.data(), x.data() + x.size());
  }
  auto sample_at = [&](double t) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    return sorted_sample[static_cast<std::size_t>(it - sorted.begin())];
  };

  std::vector<double> uncond_known(ktimes.size());
  for (std::size_t i = 0; i < ktimes.size(); ++i) uncond_known[i] = sample_at(ktimes[i]);
  std::vector<double> uncond_new(new_times.size());
  for (std::size_t i = 0; i < new_times.size(); ++i) uncond_new[i] = sample_at(new_times[i]);

  const BridgeConditioner conditioner(ktimes, hurst);
  return conditioner.apply(kvalues, uncond_known, new_times, uncond_new);
}

DyadicPath refine_dyadic_block(const DyadicPath& path, int to_level, RngStream& rng) {
  if (to_level < path.level)
    throw std::invalid_argument("refine_dyadic_block: target below current level");
  if (to_level == path.level) return path;

  const int from_level = path.level;
  const std::size_t stride = std::size_t{1} << (to_level - from_level);
  const std::size_t fine_count = DyadicPath::point_count(to_level);

  std::vector<double> fine(fine_count);
  fine[0] = 0.0;
  for (std::size_t i = 0; i < path.values.size(); ++i)
    fine[i * stride] = path.values[i];

  const DyadicPath uncond = gauss::sample_fbm_path(path.hurst, to_level, rng);

  if (from_level >= kKrigingMinLevel) {
    // Cached-factorization kriging update on the full grid (the bridge
    // recursion telescoped into one solve).
    const Eigen::MatrixXd& factor = grid_chol(path.hurst, from_level);
    const std::vector<double>& pows = pow_table(path.hurst, to_level);

    const std::size_t n_known = std::size_t{1} << from_level;
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n_known));
    for (std::size_t i = 0; i < n_known; ++i)
      resid(static_cast<Eigen::Index>(i)) =
          uncond.values[(i + 1) * stride] - path.values[i + 1];
    factor.triangularView<Eigen::Lower>().solveInPlace(resid);
    factor.transpose().triangularView<Eigen::Upper>().solveInPlace(resid);

    for (std::size_t q = 1; q < fine_count; ++q) {
      if (q % stride == 0) continue;
      double corr = 0.0;
      for (std::size_t i = 0; i < n_known; ++i) {
        const std::size_t pk = (i + 1) * stride;
        const std::size_t d = q > pk ? q - pk : pk - q;
        corr += 0.5 * (pows[q] + pows[pk] - pows[d]) * resid(static_cast<Eigen::Index>(i));
      }
      fine[q] = uncond.values[q] - corr;
    }
    return DyadicPath(path.hurst, to_level, std::move(fine));
  }

  std::vector<double> ktimes, kvalues, uncond_known;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    ktimes.push_back(path.time_at(i));
    kvalues.push_back(path.values[i]);
    uncond_known.push_back(uncond.values[i * stride]);
  }
  const double fine_denom = static_cast<double>(std::size_t{1} << to_level);
  std::vector<double> new_times, uncond_new;
  std::vector<std::size_t> new_index;
  new_times.reserve(fine_count);
  uncond_new.reserve(fine_count);
  new_index.reserve(fine_count);
  for (std::size_t q = 1; q < fine_count; ++q) {
    if (q % stride == 0) continue;
    new_times.push_back(static_cast<double>(q) / fine_denom);
    uncond_new.push_back(uncond.values[q]);
    new_index.push_back(q);
  }
  const BridgeConditioner conditioner(ktimes, path.hurst);
  const std::vector<double> vals =
      conditioner.apply(kvalues, uncond_known, new_times, uncond_new);
  for (std::size_t i = 0; i < new_index.size(); ++i) fine[new_index[i]] = vals[i];
  return DyadicPath(path.hurst, to_level, std::move(fine));
}

}  // namespace epsfbm::gauss
