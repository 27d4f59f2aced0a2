#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace epsfbm {

/// fBM values on the dyadic grid D_n = {i/2^n}, with piecewise-linear
/// interpolation semantics. values[0] is always 0 (B(0) = 0).
struct DyadicPath {
  double hurst = 0.5;
  int level = 0;
  std::vector<double> values;  // size 2^level + 1

  DyadicPath() = default;
  DyadicPath(double hurst_index, int lvl, std::vector<double> vals)
      : hurst(hurst_index), level(lvl), values(std::move(vals)) {
    check();
  }

  static std::size_t point_count(int level) {
    return (std::size_t{1} << level) + 1;
  }

  std::size_t size() const { return values.size(); }
  double time_at(std::size_t i) const {
    return static_cast<double>(i) / static_cast<double>(std::size_t{1} << level);
  }
  double mesh() const { return 1.0 / static_cast<double>(std::size_t{1} << level); }

  /// Every 2^(level-k)-th value: the path restricted to D_k.
  DyadicPath restrict_to(int k) const {
    if (k < 0 || k > level)
      throw std::out_of_range("DyadicPath::restrict_to: level out of range");
    const std::size_t stride = std::size_t{1} << (level - k);
    std::vector<double> vals(point_count(k));
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = values[i * stride];
    return DyadicPath(hurst, k, std::move(vals));
  }

  /// Piecewise-linear value at any t in [0,1].
  double interpolate(double t) const {
    if (t <= 0.0) return values.front();
    if (t >= 1.0) return values.back();
    const double pos = t * static_cast<double>(std::size_t{1} << level);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
  }

  void check() const {
    if (level < 0) throw std::invalid_argument("DyadicPath: negative level");
    if (values.size() != point_count(level))
      throw std::invalid_argument("DyadicPath: value count does not match level");
    if (!values.empty() && values.front() != 0.0)
      throw std::invalid_argument("DyadicPath: B(0) must be 0");
  }
};

}  // namespace epsfbm
