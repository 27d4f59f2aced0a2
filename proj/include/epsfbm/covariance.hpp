#pragma once

#include <cmath>
#include <stdexcept>

namespace epsfbm::gauss {

/// fBM covariance r(s,t) = (s^2H + t^2H - |s-t|^2H) / 2 on [0,inf).
inline double fbm_cov(double s, double t, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("fbm_cov: Hurst index must lie in (0,1)");
  if (s < 0.0 || t < 0.0)
    throw std::domain_error("fbm_cov: times must be nonnegative");
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(s - t), h2));
}

class FbmCovariance {
 public:
  explicit FbmCovariance(double hurst) : hurst_(hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
      throw std::domain_error("FbmCovariance: Hurst index must lie in (0,1)");
  }
  double hurst() const { return hurst_; }
  double operator()(double s, double t) const { return fbm_cov(s, t, hurst_); }

 private:
  double hurst_;
};

}  // namespace epsfbm::gauss
