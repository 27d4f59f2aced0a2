#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "epsfbm/dyadic.hpp"
#include "epsfbm/engine.hpp"
#include "epsfbm/record.hpp"
#include "epsfbm/rng.hpp"

namespace epsfbm::sde {

/// Drift/diffusion pair with the smoothness bounds of the combined field
/// f = [mu, sigma] (a d x (d'+1) matrix acting on dx = [dt; dB]).
/// The bounds are caller-supplied; spot_check verifies them at random
/// states instead of symbolically.
struct VectorFieldSpec {
  int dim = 1;         // d: state dimension
  int driver_dim = 1;  // d': driving fBM dimension
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;  // d x d'
  double f_bound = 0.0;    // |f|   (max absolute entry)
  double df_bound = 0.0;   // |grad f|
  double d2f_bound = 0.0;  // |grad^2 f|

  int h() const { return driver_dim + 1; }

  /// Combined field row block [mu(y) | sigma(y)], d x h.
  Eigen::MatrixXd combined(const Eigen::VectorXd& y) const;

  /// 10^3 random states in [-2,2]^d: checks max|f| <= f_bound and the
  /// finite-difference gradient against df_bound * (1 + 1e-3).
  void spot_check(RngStream& rng) const;
};

/// All constants of the explicit Euler error bound
/// ||y_n - y||_inf <= G Delta_n^{2 alpha - 1}.
struct EulerConstants {
  double alpha = 0.0;
  double c_alpha = 0.0;
  double k2a = 0.0;  // K(2 alpha) = 1 + sum n^{-2 alpha}
  double g1_star = 0.0, g2_star = 0.0;
  double big_l = 0.0, omega = 0.0;
  double g1 = 0.0, g2 = 0.0;
  double zeta = 0.0, upsilon = 0.0;
  long long recursion_length = 0;  // k* = ceil((4 zeta)^{1/alpha})
  std::vector<double> gamma_prefix, upsilon_prefix;  // first steps, for inspection
  double g = 0.0;  // G = Upsilon_{k*} + G1*
};

/// Evaluates the constants; the Gamma/Upsilon recursion is affine, so the
/// terminal value is computed in closed form (with the looped prefix kept
/// for small k*). Degenerate fields (|f| = 0 or |grad f| = 0) take the
/// G = G1* convention instead of dividing 0/0.
EulerConstants euler_constants(const VectorFieldSpec& field, double c_alpha,
                               double alpha);

/// Euler scheme driven by [t; B^1; ...; B^d'] on the drivers' common grid.
/// Returns all 2^n + 1 states; piecewise-constant interpolation semantics.
std::vector<Eigen::VectorXd> euler_solve(const VectorFieldSpec& field,
                                         std::span<const DyadicPath> drivers,
                                         const Eigen::VectorXd& y0);

struct SdeResult {
  int level = 0;       // N_Y
  double eps = 0.0;    // guaranteed sup-norm error
  double g_constant = 0.0;
  double c_alpha = 0.0;  // certified driver Hoelder bound (including time)
  std::vector<Eigen::VectorXd> states;
  std::vector<DyadicPath> drivers;  // the driving paths actually consumed
  std::vector<EpsilonCertificate> driver_certs;
};

/// Algorithm "SSDE". Requires H > 1/2, alpha in (1/2, H) and
/// delta in (0, H - alpha). The guarantee G Delta^{2 alpha - 1} <= eps
/// holds path by path.
SdeResult ssde(double eps, const VectorFieldSpec& field, const RecordParams& p,
               double alpha, const Eigen::VectorXd& y0, RngStream& rng);

}  // namespace epsfbm::sde
