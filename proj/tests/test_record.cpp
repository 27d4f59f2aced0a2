#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epsfbm/circulant.hpp"
#include "epsfbm/record.hpp"
#include "support/oracles.hpp"

using namespace epsfbm;

TEST_CASE("RecordParams invariants", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  REQUIRE(p.nu == Catch::Approx(1.25));
  REQUIRE(p.rho == Catch::Approx(2.0 * (p.nu + p.nustar)).margin(1e-12));
  for (int k = 1; k < 20; ++k) REQUIRE(p.ell(k + 1) < p.ell(k));
  REQUIRE_THROWS_AS(RecordParams(0.8, 0.9, 1.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(RecordParams(0.8, 0.1, -1.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(RecordParams(1.5, 0.1, 1.0, 1.0), std::domain_error);
}

TEST_CASE("midpoint deviation of a linear path vanishes", "[record]") {
  const int level = 5;
  std::vector<double> vals(DyadicPath::point_count(level));
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = static_cast<double>(i) / static_cast<double>(vals.size() - 1);
  const DyadicPath path(0.8, level, std::move(vals));
  for (int k = 1; k <= level; ++k)
    REQUIRE(midpoint_deviation(path, k) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("level-1 midpoint deviation is |v - w/2|", "[record]") {
  const DyadicPath path(0.8, 1, {0.0, 0.7, -0.4});
  REQUIRE(midpoint_deviation(path, 1) == Catch::Approx(std::abs(0.7 + 0.2)).margin(1e-15));
}

TEST_CASE("midpoint deviation agrees with the dense-grid oracle", "[record]") {
  RngStream rng(31, 0);
  const DyadicPath path = gauss::sample_fbm_path(0.7, 4, rng);
  const DyadicPath coarse = path.restrict_to(3);
  const double oracle = testsupport::dense_sup_difference(path, coarse, 10000);
  REQUIRE(midpoint_deviation(path, 4) == Catch::Approx(oracle).margin(1e-12));
}

TEST_CASE("record breaker boundary counts as broken", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const double threshold = p.level_threshold(1);
  const DyadicPath at_boundary(0.8, 1, {0.0, threshold, 0.0});
  REQUIRE(is_record_broken(at_boundary, 1, p));
  const DyadicPath below(0.8, 1, {0.0, threshold * (1 - 1e-12), 0.0});
  REQUIRE_FALSE(is_record_broken(below, 1, p));

  const DyadicPath zero(0.8, 3, std::vector<double>(9, 0.0));
  for (int k = 1; k <= 3; ++k) REQUIRE_FALSE(is_record_broken(zero, k, p));
}

TEST_CASE("deviation 0.9 at level 3 stays under the rho=5 threshold", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  std::vector<double> vals(9, 0.0);
  vals[1] = 0.9;  // deviation at k=3 is exactly 0.9
  const DyadicPath path(0.8, 3, std::move(vals));
  REQUIRE(midpoint_deviation(path, 3) == Catch::Approx(0.9));
  REQUIRE(p.level_threshold(3) == Catch::Approx(5.0 * std::exp2(-2.1)).margin(1e-12));
  REQUIRE_FALSE(is_record_broken(path, 3, p));
}

TEST_CASE("K_of_nu pinned and oracle-checked values", "[record]") {
  REQUIRE(K_of_nu(4.0, 0.1) == 22);
  REQUIRE(K_of_nu(1000.0, 0.5) == 0);

  // Exhaustive scan to n = 10^4.
  int last = 0;
  for (int n = 1; n <= 10000; ++n)
    if (4.0 * std::sqrt(static_cast<double>(n)) > 0.1 * std::exp2(0.1 * n)) last = n;
  REQUIRE(K_of_nu(0.1, 0.1) == last);
}

TEST_CASE("Z_n values and monotonicity", "[record]") {
  const RecordParams p5 = RecordParams::from_rho(0.8, 0.1, 5.0);
  const double z1 = z_constant(1, p5);
  REQUIRE(z1 == Catch::Approx(testsupport::z_oracle(1, 5.0, 0.1)).epsilon(1e-9));
  REQUIRE(z1 == Catch::Approx(0.385).margin(0.003));
  REQUIRE(z1 < 1.0);
  for (int n = 1; n < 15; ++n) REQUIRE(z_constant(n + 1, p5) < z_constant(n, p5));

  const RecordParams p1 = RecordParams::from_rho(0.8, 0.1, 1.0);
  REQUIRE(z_constant(37, p1) > 1.0);
  REQUIRE(z_constant(38, p1) < 1.0);
  REQUIRE(z_constant(37, p1) ==
          Catch::Approx(testsupport::z_oracle(37, 1.0, 0.1)).epsilon(1e-9));
}

TEST_CASE("starting levels reproduce the deterministic table", "[record]") {
  REQUIRE(starting_level(RecordParams::from_rho(0.8, 0.1, 5.0)) == 1);
  REQUIRE(starting_level(RecordParams::from_rho(0.8, 0.1, 2.5)) == 21);
  REQUIRE(starting_level(RecordParams::from_rho(0.8, 0.2, 1.0)) == 16);
  // N* does not depend on H.
  REQUIRE(starting_level(RecordParams::from_rho(0.45, 0.1, 2.5)) == 21);
}

TEST_CASE("proposal distribution is normalized and matches direct summation",
          "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const ProposalDist g(1, p);
  double total = 0.0;
  for (int m = 1; m <= g.max_m(); ++m) total += g.pmf(m);
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(g.znorm() == 1.0);

  // g_1(1) by direct summation of the unnormalized terms.
  const double a2 = std::exp2(2.0) * std::exp(-25.0 / 8.0 * std::exp2(0.4));
  const double expected = a2 / testsupport::z_oracle(1, 5.0, 0.1);

  RngStream rng(32, 0);
  const int reps = 100000;
  int count = 0;
  for (int i = 0; i < reps; ++i)
    if (g.sample(rng) == 1) ++count;
  REQUIRE(static_cast<double>(count) / reps == Catch::Approx(expected).margin(0.01));

  RngStream a(32, 1), b(32, 1);
  for (int i = 0; i < 100; ++i) REQUIRE(g.sample(a) == g.sample(b));
}

TEST_CASE("tilt parameter values and scaling", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  REQUIRE(tilt_parameter(3, 2, p) ==
          Catch::Approx(2.5 * std::exp2(4.5)).margin(1e-12));
  REQUIRE(tilt_parameter(3, 3, p) / tilt_parameter(3, 2, p) ==
          Catch::Approx(std::exp2(0.9)).margin(1e-12));
}

TEST_CASE("uniform error bound values and decay", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const double expected = 5.0 * std::exp2(-0.7 * 12.0) / (1.0 - std::exp2(-0.7));
  REQUIRE(uniform_error_bound(11, p) == Catch::Approx(expected).margin(1e-12));
  REQUIRE(uniform_error_bound(11, p) == Catch::Approx(0.03845).margin(1e-4));
  for (int n = 0; n < 30; ++n) {
    REQUIRE(uniform_error_bound(n + 1, p) <
            uniform_error_bound(n, p) * (std::exp2(-0.7) + 1e-12));
  }
  REQUIRE(uniform_error_bound(200, p) < 1e-40);
}

TEST_CASE("Hoelder error bound values and domain", "[record]") {
  const RecordParams p = RecordParams::from_rho(0.8, 0.1, 5.0);
  const double expected =
      5.0 * std::exp2(1.4) * std::exp2(-1.1) / (1.0 - std::exp2(-0.1));
  REQUIRE(holder_error_bound(10, 0.6, p) == Catch::Approx(expected).margin(1e-12));
  REQUIRE(holder_error_bound(11, 0.6, p) < holder_error_bound(10, 0.6, p));

  // delta -> H - alpha degenerates to the +inf sentinel.
  const RecordParams tight = RecordParams::from_rho(0.8, 0.2, 5.0);
  REQUIRE(std::isinf(holder_error_bound(5, 0.6, tight)));
  REQUIRE_THROWS_AS(holder_error_bound(5, 0.75, tight), std::domain_error);
  REQUIRE_THROWS_AS(holder_error_bound(5, 0.4, p), std::domain_error);
  const RecordParams low = RecordParams::from_rho(0.45, 0.1, 5.0);
  REQUIRE_THROWS_AS(holder_error_bound(5, 0.6, low), std::domain_error);
}

TEST_CASE("truncation level pinned values", "[record]") {
  const RecordParams p08 = RecordParams::from_rho(0.8, 0.1, 5.0);
  REQUIRE(truncation_level(0.1, 1, p08) == 11);
  REQUIRE(truncation_level(0.1, 11, p08) == 11);
  REQUIRE(truncation_level(0.1, 13, p08) == 13);  // max with N

  const RecordParams p045 = RecordParams::from_rho(0.45, 0.1, 5.0);
  REQUIRE(truncation_level(0.1, 1, p045) == 23);

  const RecordParams p1 = RecordParams::from_rho(0.8, 0.1, 1.0);
  REQUIRE(truncation_level(0.1, 1, p1) == 7);

  REQUIRE(truncation_level(0.01, 1, p08) == 15);
}
