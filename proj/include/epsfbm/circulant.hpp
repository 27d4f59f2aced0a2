#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/rng.hpp"

namespace epsfbm::gauss {

/// Thrown when the circulant embedding of the increment covariance has an
/// eigenvalue below the -1e-9 tolerance.
struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact sample of (B^H(1/n), ..., B^H(1)) for n a power of two, by
/// circulant embedding of the stationary increment sequence plus a
/// cumulative sum. O(n log n).
std::vector<double> circulant_fbm_grid(std::size_t n_points, double hurst,
                                       RngStream& rng);

/// Largest level circulant_fbm_grid accepts (memory bound on this class
/// of machines; two scratch buffers of 2^(level+1) doubles are live).
inline constexpr int kMaxCirculantLevel = 26;

/// Exact fBM sample on the full dyadic grid D_level, including t=0.
/// Dense factorization (cached per (H, level)) below kDenseSampleMaxLevel,
/// circulant embedding above; embedding failure falls back to dense when
/// the grid is small enough.
DyadicPath sample_fbm_path(double hurst, int level, RngStream& rng);

/// Cutoff between the cached dense factorization and the FFT path.
inline constexpr int kDenseSampleMaxLevel = 5;

}  // namespace epsfbm::gauss
