#include "epsfbm/circulant.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "epsfbm/covariance.hpp"
#include "epsfbm/grid_gaussian.hpp"

namespace epsfbm::gauss {

namespace {

std::mutex fftw_mutex;  // FFTW planning is not thread-safe

struct FftwBuffer {
  double* data = nullptr;
  explicit FftwBuffer(std::size_t n) {
    data = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// One backward (halfcomplex-to-real) plan per size, reused across threads
// via the new-array execute API. fftw_malloc keeps alignment uniform.
fftw_plan hc2r_plan(std::size_t n) {
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(fftw_mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  FftwBuffer in(n), out(n);
  // Large transforms dominate deep refinements and are executed thousands
  // of times per plan, so a bounded measurement pass pays for itself.
  unsigned flags = FFTW_ESTIMATE | FFTW_DESTROY_INPUT;
  if (n >= (std::size_t{1} << 20)) {
    fftw_set_timelimit(45.0);
    flags = FFTW_MEASURE | FFTW_DESTROY_INPUT;
  }
  fftw_plan p = fftw_plan_r2r_1d(static_cast<int>(n), in.data, out.data,
                                 FFTW_HC2R, flags);
  if (!p) throw std::runtime_error("hc2r_plan: FFTW planning failed");
  plans.emplace(n, p);
  return p;
}

// Premultiplied spectrum amplitudes for one (H, n_points) pair:
// amp[0] = sqrt(l_0/N), amp[M] = sqrt(l_M/N), amp[j] = sqrt(l_j/(2N)),
// where l_j are the circulant eigenvalues and N = 2M.
struct Spectrum {
  std::vector<double> amp;  // size M+1
};

const Spectrum& fgn_spectrum(double hurst, std::size_t m_points) {
  static std::map<std::pair<double, std::size_t>, std::unique_ptr<Spectrum>> cache;
  static std::mutex cache_mutex;
  const auto key = std::make_pair(hurst, m_points);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }

  const std::size_t n = 2 * m_points;
  const double h2 = 2.0 * hurst;
  const double scale = std::pow(1.0 / static_cast<double>(m_points), h2);
  auto gamma = [&](std::size_t k) {
    const double kk = static_cast<double>(k);
    return 0.5 * scale *
           (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) +
            std::pow(std::abs(kk - 1.0), h2));
  };

  FftwBuffer row(n), eig(n);
  for (std::size_t j = 0; j <= m_points; ++j) row.data[j] = gamma(j);
  for (std::size_t j = m_points + 1; j < n; ++j) row.data[j] = gamma(n - j);

  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    p = fftw_plan_r2r_1d(static_cast<int>(n), row.data, eig.data, FFTW_R2HC,
                         FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(p);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(p);
  }

  double max_eig = 0.0;
  for (std::size_t j = 0; j <= m_points; ++j)
    max_eig = std::max(max_eig, eig.data[j]);
  auto spec = std::make_unique<Spectrum>();
  spec->amp.resize(m_points + 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j <= m_points; ++j) {
    double lambda = eig.data[j];
    if (lambda < -1e-9 * std::max(1.0, max_eig))
      throw EmbeddingError("circulant embedding has a negative eigenvalue");
    if (lambda < 0.0) lambda = 0.0;
    const double factor = (j == 0 || j == m_points) ? inv_n : 0.5 * inv_n;
    spec->amp[j] = std::sqrt(lambda * factor);
  }

  std::lock_guard<std::mutex> lock(cache_mutex);
  auto [it, inserted] = cache.emplace(key, std::move(spec));
  return *it->second;
}

Eigen::MatrixXd dense_grid_factor(double hurst, int level) {
  const std::size_t m = std::size_t{1} << level;
  std::vector<double> times(m);
  for (std::size_t i = 0; i < m; ++i)
    times[i] = static_cast<double>(i + 1) / static_cast<double>(m);
  const GridGaussian g = fbm_grid_gaussian(times, hurst);
  return detail::cholesky_with_jitter(g.cov);
}

const Eigen::MatrixXd& cached_dense_factor(double hurst, int level) {
  static std::map<std::pair<double, int>, std::unique_ptr<Eigen::MatrixXd>> cache;
  static std::mutex cache_mutex;
  const auto key = std::make_pair(hurst, level);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  auto factor = std::make_unique<Eigen::MatrixXd>(dense_grid_factor(hurst, level));
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto [it, inserted] = cache.emplace(key, std::move(factor));
  return *it->second;
}

}  // namespace

std::vector<double> circulant_fbm_grid(std::size_t n_points, double hurst,
                                       RngStream& rng) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("circulant_fbm_grid: Hurst index must lie in (0,1)");
  if (n_points == 0 || !std::has_single_bit(n_points))
    throw std::invalid_argument("circulant_fbm_grid: n_points must be a power of two");
  if (n_points > (std::size_t{1} << kMaxCirculantLevel))
    throw std::invalid_argument("circulant_fbm_grid: grid above the supported level");

  if (n_points == 1) return {rng.normal()};  // B(1) ~ N(0,1)

  const Spectrum& spec = fgn_spectrum(hurst, n_points);
  const std::size_t n = 2 * n_points;

  FftwBuffer in(n), out(n);
  in.data[0] = spec.amp[0] * rng.normal();
  in.data[n_points] = spec.amp[n_points] * rng.normal();
  for (std::size_t j = 1; j < n_points; ++j) {
    in.data[j] = spec.amp[j] * rng.normal();
    in.data[n - j] = spec.amp[j] * rng.normal();
  }
  fftw_execute_r2r(hc2r_plan(n), in.data, out.data);

  std::vector<double> path(n_points);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    acc += out.data[i];
    path[i] = acc;
  }
  return path;
}

DyadicPath sample_fbm_path(double hurst, int level, RngStream& rng) {
  if (level < 0) throw std::invalid_argument("sample_fbm_path: negative level");
  const std::size_t m = std::size_t{1} << level;
  std::vector<double> values(m + 1);
  values[0] = 0.0;

  if (level == 0) {
    values[1] = rng.normal();
    return DyadicPath(hurst, level, std::move(values));
  }

  if (level <= kDenseSampleMaxLevel) {
    const Eigen::MatrixXd& factor = cached_dense_factor(hurst, level);
    Eigen::VectorXd z(factor.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd x = factor.template triangularView<Eigen::Lower>() * z;
    for (std::size_t i = 0; i < m; ++i) values[i + 1] = x(static_cast<Eigen::Index>(i));
    return DyadicPath(hurst, level, std::move(values));
  }

  std::vector<double> grid;
  try {
    grid = circulant_fbm_grid(m, hurst, rng);
  } catch (const EmbeddingError&) {
    if (level > 13)
      throw;  // dense fallback would need > 2^13 points
    const Eigen::MatrixXd factor = dense_grid_factor(hurst, level);
    Eigen::VectorXd z(factor.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd x = factor.template triangularView<Eigen::Lower>() * z;
    for (std::size_t i = 0; i < m; ++i) values[i + 1] = x(static_cast<Eigen::Index>(i));
    return DyadicPath(hurst, level, std::move(values));
  }
  std::copy(grid.begin(), grid.end(), values.begin() + 1);
  return DyadicPath(hurst, level, std::move(values));
}

}  // namespace epsfbm::gauss
