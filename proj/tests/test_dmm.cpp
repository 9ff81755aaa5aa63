#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/dmm.hpp"
#include "kernelgamma/geometry.hpp"

namespace kg = kernelgamma;
namespace geo = kernelgamma::geometry;
namespace dmm = kernelgamma::dmm;

namespace {

geo::ClassGeometry fixed_geometry(double d_max, double d_min, double d_av) {
  geo::ClassGeometry g;
  g.d_max = d_max;
  g.d_min_interclass = d_min;
  g.d_av = d_av;
  g.t_pairs = 1;
  return g;
}

kg::Dataset random_dataset(unsigned seed, int classes, int per_class, int dim,
                           double scale = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, std::vector<double>>> rows;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> x(static_cast<std::size_t>(dim));
      // Offset classes so inter-class distances stay positive.
      for (int j = 0; j < dim; ++j)
        x[static_cast<std::size_t>(j)] = scale * (u(rng) + 3.0 * c);
      rows.emplace_back(static_cast<double>(c), x);
    }
  }
  return kg::make_dataset(rows);
}

}  // namespace

TEST_CASE("estimate substitutes the class geometry into the closed form") {
  const dmm::Estimate avg = dmm::estimate(fixed_geometry(1.0, 2.0, 3.0));
  CHECK(avg.variant == dmm::Variant::kAvg);
  CHECK(avg.gamma == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(avg.sigma == Catch::Approx(std::sqrt(1.5)).epsilon(1e-15));
  CHECK(avg.d_max == 1.0);
  CHECK(avg.d_used == 3.0);

  const dmm::Estimate mn =
      dmm::estimate(fixed_geometry(2.0, 2.0, 3.0), dmm::Variant::kMin);
  CHECK(mn.gamma == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(mn.d_used == 2.0);
}

TEST_CASE("estimate keeps gamma and sigma consistent") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.05, 40.0);
  for (int i = 0; i < 50; ++i) {
    const dmm::Estimate e = dmm::estimate(fixed_geometry(u(rng), 1.0, u(rng)));
    CHECK(e.gamma * 2.0 * e.sigma * e.sigma == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("estimate rejects degenerate geometry") {
  CHECK_THROWS_AS(dmm::estimate(fixed_geometry(0.0, 1.0, 1.0)),
                  kg::degenerate_geometry_error);
  CHECK_THROWS_AS(dmm::estimate(fixed_geometry(1.0, 1.0, 0.0)),
                  kg::degenerate_geometry_error);
  // The min-variant message should point at the avg fallback.
  try {
    dmm::estimate(fixed_geometry(1.0, 0.0, 1.0), dmm::Variant::kMin);
    FAIL("expected degenerate_geometry_error");
  } catch (const kg::degenerate_geometry_error& e) {
    CHECK(std::string(e.what()).find("avg") != std::string::npos);
  }
}

TEST_CASE("variants coincide when only one class pair exists") {
  const kg::Dataset ds = random_dataset(5, 2, 25, 3);
  const geo::ClassGeometry g = geo::compute_geometry(ds);
  REQUIRE(g.t_pairs == 1);
  CHECK(g.d_min_interclass == g.d_av);
  CHECK(dmm::estimate(g, dmm::Variant::kMin).gamma ==
        dmm::estimate(g, dmm::Variant::kAvg).gamma);
}

TEST_CASE("weighted objective evaluates the two-term tradeoff") {
  const geo::ClassGeometry g = fixed_geometry(1.0, 3.0, 3.0);
  // At the balanced stationary point the value collapses to D_max/d_min.
  CHECK(dmm::weighted_objective(1.0 / 3.0, 0.5, g) ==
        Catch::Approx(1.0 / 3.0).epsilon(1e-14));

  const geo::ClassGeometry unit = fixed_geometry(1.0, 1.0, 1.0);
  CHECK(dmm::weighted_objective(1.0, 0.5, unit) == 1.0);

  SECTION("doubling gamma away from the stationary point raises the value") {
    const double at = dmm::weighted_objective(1.0 / 3.0, 0.5, g);
    CHECK(dmm::weighted_objective(2.0 / 3.0, 0.5, g) > at);
    CHECK(dmm::weighted_objective(1.0 / 6.0, 0.5, g) > at);
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(dmm::weighted_objective(0.0, 0.5, g), kg::data_error);
    CHECK_THROWS_AS(dmm::weighted_objective(-1.0, 0.5, g), kg::data_error);
    CHECK_THROWS_AS(dmm::weighted_objective(1.0, 0.0, g), kg::data_error);
    CHECK_THROWS_AS(dmm::weighted_objective(1.0, 1.0, g), kg::data_error);
  }
}

TEST_CASE("stationary gamma solves the weighted objective in closed form") {
  const geo::ClassGeometry g = fixed_geometry(1.0, 3.0, 3.0);
  CHECK(dmm::stationary_gamma(0.5, g) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

  const geo::ClassGeometry unit = fixed_geometry(1.0, 1.0, 1.0);
  CHECK(dmm::stationary_gamma(0.2, unit) == Catch::Approx(2.0).epsilon(1e-15));

  SECTION("balanced weighting reduces to the min-variant estimate") {
    const kg::Dataset ds = random_dataset(9, 3, 15, 4);
    const geo::ClassGeometry rg = geo::compute_geometry(ds);
    CHECK(dmm::stationary_gamma(0.5, rg) ==
          Catch::Approx(dmm::estimate(rg, dmm::Variant::kMin).gamma)
              .epsilon(1e-14));
  }
  SECTION("lambda domain") {
    CHECK_THROWS_AS(dmm::stationary_gamma(0.0, g), kg::data_error);
    CHECK_THROWS_AS(dmm::stationary_gamma(1.0, g), kg::data_error);
    CHECK_THROWS_AS(dmm::stationary_gamma(0.5, fixed_geometry(0.0, 1.0, 1.0)),
                    kg::degenerate_geometry_error);
  }
}

TEST_CASE("stationary gamma is where the finite-difference slope flips") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int i = 0; i < 20; ++i) {
    const geo::ClassGeometry g = fixed_geometry(u(rng), u(rng), u(rng));
    for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double gbar = dmm::stationary_gamma(lambda, g);
      const double at = dmm::weighted_objective(gbar, lambda, g);
      const double eps = 0.1 * gbar;
      CHECK(dmm::weighted_objective(gbar + eps, lambda, g) > at);
      CHECK(dmm::weighted_objective(gbar - eps, lambda, g) > at);
    }
  }
}

TEST_CASE("log-grid minimization lands on the stationary gamma") {
  const geo::ClassGeometry g = fixed_geometry(2.5, 0.8, 1.1);
  for (double lambda : {0.15, 0.5, 0.85}) {
    const int n = 2000;
    const double lo = std::log(1e-6), hi = std::log(1e6);
    double best_gamma = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double gamma =
          std::exp(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
      const double val = dmm::weighted_objective(gamma, lambda, g);
      if (val < best_val) {
        best_val = val;
        best_gamma = gamma;
      }
    }
    const double step = (hi - lo) / (n - 1);
    CHECK(std::abs(std::log(best_gamma) -
                   std::log(dmm::stationary_gamma(lambda, g))) <= step);
  }
}

TEST_CASE("balanced weighting is where the envelope slope vanishes") {
  // The envelope value G(stationary_gamma(lambda)) is 2 sqrt(lambda (1 -
  // lambda)) D_max/d_min; its lambda-derivative changes sign at 1/2.
  const geo::ClassGeometry g = fixed_geometry(1.7, 0.9, 0.9);
  auto envelope = [&](double lambda) {
    return dmm::weighted_objective(dmm::stationary_gamma(lambda, g), lambda, g);
  };
  for (double lambda : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    CHECK(envelope(lambda) ==
          Catch::Approx(2.0 * std::sqrt(lambda * (1.0 - lambda)) * g.d_max /
                        g.d_min_interclass)
              .epsilon(1e-12));
  }
  const double h = 1e-6;
  const double slope_at_half = (envelope(0.5 + h) - envelope(0.5 - h)) / (2 * h);
  CHECK(std::abs(slope_at_half) < 1e-4);
  CHECK((envelope(0.4 + h) - envelope(0.4 - h)) / (2 * h) > 0.1);
  CHECK((envelope(0.6 + h) - envelope(0.6 - h)) / (2 * h) < -0.1);
}

TEST_CASE("scaling all features by s scales gamma by 1/s^2 and sigma by s") {
  for (double s : {0.25, 2.0, 7.5}) {
    const kg::Dataset base = random_dataset(23, 3, 20, 4, 1.0);
    const kg::Dataset scaled = random_dataset(23, 3, 20, 4, s);
    const dmm::Estimate e0 = dmm::estimate(geo::compute_geometry(base));
    const dmm::Estimate e1 = dmm::estimate(geo::compute_geometry(scaled));
    CHECK(e1.gamma == Catch::Approx(e0.gamma / (s * s)).epsilon(1e-10));
    CHECK(e1.sigma == Catch::Approx(e0.sigma * s).epsilon(1e-10));
  }
}
