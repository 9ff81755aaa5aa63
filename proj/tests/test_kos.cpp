#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "kernelgamma/dataset.hpp"
#include "kernelgamma/kernel.hpp"
#include "kernelgamma/kos.hpp"
#include "kernelgamma/synthetic.hpp"

namespace kg = kernelgamma;
namespace kos = kernelgamma::kos;
namespace kern = kernelgamma::kernel;

namespace {

kg::Dataset two_class_random(unsigned seed, int n0, int n1, int dim) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, std::vector<double>>> rows;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < (c == 0 ? n0 : n1); ++i) {
      std::vector<double> x(static_cast<std::size_t>(dim));
      for (double& v : x) v = u(rng) + 2.5 * c;
      rows.emplace_back(static_cast<double>(c), x);
    }
  }
  return kg::make_dataset(rows);
}

// Literal four-term coordinate oracle, every sum spelled out against the
// uncentered class Gram.
double coordinate_oracle(const kos::ClassSubspace& sub, std::size_t i,
                         kg::PointView x, double gamma) {
  const std::size_t n = sub.train_points.size();
  const std::vector<double>& v = sub.eigenvectors[i];

  std::vector<kg::PointView> views;
  for (const auto& p : sub.train_points) views.emplace_back(p);
  const kern::GramMatrix g = kern::gram(views, gamma);

  double term1 = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    term1 += v[l] * kern::rbf(sub.train_points[l], x, gamma);

  double term2 = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t j = 0; j < n; ++j) term2 += v[l] * g.at(l, j);
  term2 /= static_cast<double>(n);

  double kmean = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    kmean += kern::rbf(sub.train_points[j], x, gamma);
  kmean /= static_cast<double>(n);

  double vsum = 0.0;
  for (std::size_t l = 0; l < n; ++l) vsum += v[l];

  double gsum = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t j = 0; j < n; ++j) gsum += g.at(l, j);
  gsum /= static_cast<double>(n * n);

  return (term1 - term2 - kmean * vsum + gsum * vsum) /
         std::sqrt(sub.eigenvalues[i]);
}

}  // namespace

TEST_CASE("balanced classes pass through the imbalance split whole") {
  const kg::Dataset ds = two_class_random(1, 10, 10, 3);
  const std::vector<kos::Chunk> chunks = kos::split_imbalanced(ds);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].class_id == 0);
  CHECK(chunks[0].subclass_id == 0);
  CHECK(chunks[0].points.size() == 10);
  CHECK(chunks[1].class_id == 1);
  CHECK(chunks[1].points.size() == 10);
}

TEST_CASE("a class more than twice the smallest is chunked near-evenly") {
  const kg::Dataset ds = two_class_random(2, 10, 25, 3);
  const std::vector<kos::Chunk> chunks = kos::split_imbalanced(ds);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].points.size() == 10);
  CHECK(chunks[1].class_id == 1);
  CHECK(chunks[1].subclass_id == 0);
  CHECK(chunks[1].points.size() == 13);
  CHECK(chunks[2].class_id == 1);
  CHECK(chunks[2].subclass_id == 1);
  CHECK(chunks[2].points.size() == 12);
}

TEST_CASE("the imbalance threshold is inclusive") {
  const kg::Dataset ds = two_class_random(3, 10, 20, 3);
  CHECK(kos::split_imbalanced(ds).size() == 2);
}

TEST_CASE("splitting permutes but never drops or invents points") {
  const kg::Dataset ds = two_class_random(4, 8, 30, 2);
  const std::vector<kos::Chunk> chunks = kos::split_imbalanced(ds);

  std::multiset<std::vector<double>> expected, got;
  for (std::size_t i : ds.class_members(1)) expected.insert(ds[i].features);
  for (const kos::Chunk& c : chunks)
    if (c.class_id == 1)
      for (const auto& p : c.points) got.insert(p);
  CHECK(expected == got);
}

TEST_CASE("chunking without shuffle keeps stored order") {
  kos::Options opts;
  opts.shuffle = false;
  const kg::Dataset ds = two_class_random(5, 4, 9, 2);
  const std::vector<kos::Chunk> chunks = kos::split_imbalanced(ds, opts);
  REQUIRE(chunks.size() == 3);  // 9 > 2*4, q = ceil(9/8) = 2
  std::vector<std::vector<double>> rebuilt;
  for (const kos::Chunk& c : chunks)
    if (c.class_id == 1)
      rebuilt.insert(rebuilt.end(), c.points.begin(), c.points.end());
  std::vector<std::vector<double>> stored;
  for (std::size_t i : ds.class_members(1)) stored.push_back(ds[i].features);
  CHECK(rebuilt == stored);
  CHECK(chunks[1].points.size() == 5);
  CHECK(chunks[2].points.size() == 4);
}

TEST_CASE("imbalance factor below one is rejected") {
  const kg::Dataset ds = two_class_random(6, 5, 5, 2);
  kos::Options opts;
  opts.imbalance_factor = 0.5;
  CHECK_THROWS_AS(kos::split_imbalanced(ds, opts), kg::data_error);
}

TEST_CASE("a two-point class keeps exactly one eigenpair") {
  const kg::Dataset ds = kg::make_dataset(
      {{0.0, {0.0, 0.0}}, {0.0, {1.0, 0.0}}, {1.0, {5.0, 5.0}}, {1.0, {6.0, 5.0}}});
  const kos::Model model = kos::fit(ds, 1.0);
  REQUIRE(model.subspaces.size() == 2);
  for (const kos::ClassSubspace& sub : model.subspaces) {
    REQUIRE(sub.eigenvalues.size() == 1);
    // Centered 2x2 Gram is (1-q)/2 * [[1,-1],[-1,1]], spectrum {1-q, 0}.
    CHECK(sub.eigenvalues[0] ==
          Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(std::abs(sub.eigenvectors[0][0]) ==
          Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sub.eigenvectors[0][0] == Catch::Approx(-sub.eigenvectors[0][1]).epsilon(1e-12));
  }
}

TEST_CASE("degenerate classes are rejected at fit time") {
  SECTION("single-point class") {
    const kg::Dataset ds =
        kg::make_dataset({{0.0, {0.0}}, {1.0, {4.0}}, {1.0, {5.0}}});
    CHECK_THROWS_AS(kos::fit(ds, 1.0), kg::degenerate_class_error);
  }
  SECTION("coincident points") {
    const kg::Dataset ds = kg::make_dataset(
        {{0.0, {1.0}}, {0.0, {1.0}}, {1.0, {4.0}}, {1.0, {5.0}}});
    CHECK_THROWS_AS(kos::fit(ds, 1.0), kg::degenerate_class_error);
  }
  SECTION("gamma must be positive") {
    const kg::Dataset ds = two_class_random(7, 5, 5, 2);
    CHECK_THROWS_AS(kos::fit(ds, 0.0), kg::data_error);
  }
}

TEST_CASE("retained spectrum carries the centered trace") {
  const kg::Dataset ds = two_class_random(8, 10, 10, 4);
  const kos::Model model = kos::fit(ds, 0.8);
  for (const kos::ClassSubspace& sub : model.subspaces) {
    std::vector<kg::PointView> views;
    for (const auto& p : sub.train_points) views.emplace_back(p);
    const kern::GramMatrix centered = kern::center(kern::gram(views, 0.8));
    double trace = 0.0;
    for (std::size_t i = 0; i < centered.n; ++i) trace += centered.at(i, i);

    double retained = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double ev : sub.eigenvalues) {
      CHECK(ev > 0.0);
      CHECK(ev <= prev);
      retained += ev;
      prev = ev;
    }
    CHECK(retained == Catch::Approx(trace).margin(1e-9));
  }
}

TEST_CASE("retained eigenvectors are orthonormal") {
  const kg::Dataset ds = two_class_random(9, 14, 14, 3);
  const kos::Model model = kos::fit(ds, 1.2);
  for (const kos::ClassSubspace& sub : model.subspaces) {
    for (std::size_t a = 0; a < sub.eigenvectors.size(); ++a) {
      for (std::size_t b = a; b < sub.eigenvectors.size(); ++b) {
        double dot = 0.0;
        for (std::size_t l = 0; l < sub.eigenvectors[a].size(); ++l)
          dot += sub.eigenvectors[a][l] * sub.eigenvectors[b][l];
        CHECK(dot == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-9));
      }
    }
  }
}

TEST_CASE("training points reproduce their eigen-coordinates") {
  const kg::Dataset ds = two_class_random(10, 12, 9, 3);
  const double gamma = 0.9;
  const kos::Model model = kos::fit(ds, gamma);
  for (const kos::ClassSubspace& sub : model.subspaces) {
    for (std::size_t t = 0; t < sub.train_points.size(); ++t) {
      const std::vector<double> alphas =
          kos::coordinates(sub, sub.train_points[t], gamma);
      REQUIRE(alphas.size() == sub.eigenvalues.size());
      for (std::size_t i = 0; i < alphas.size(); ++i)
        CHECK(alphas[i] == Catch::Approx(std::sqrt(sub.eigenvalues[i]) *
                                         sub.eigenvectors[i][t])
                               .margin(1e-9));
    }
  }
}

TEST_CASE("a query on the symmetry axis of a two-point class projects to zero") {
  const kg::Dataset ds = kg::make_dataset(
      {{0.0, {-1.0, 0.0}}, {0.0, {1.0, 0.0}}, {1.0, {0.0, 9.0}}, {1.0, {0.0, 10.0}}});
  const kos::Model model = kos::fit(ds, 1.0);
  const std::vector<double> origin = {0.0, 0.0};
  const std::vector<double> alphas =
      kos::coordinates(model.subspaces[0], origin, 1.0);
  REQUIRE(alphas.size() == 1);
  CHECK(alphas[0] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("coordinates match the literal four-term oracle") {
  const kg::Dataset ds = two_class_random(11, 11, 7, 4);
  const double gamma = 1.3;
  const kos::Model model = kos::fit(ds, gamma);

  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 3.5);
  for (int probe = 0; probe < 5; ++probe) {
    std::vector<double> x(4);
    for (double& v : x) v = u(rng);
    for (const kos::ClassSubspace& sub : model.subspaces) {
      const std::vector<double> alphas = kos::coordinates(sub, x, gamma);
      for (std::size_t i = 0; i < alphas.size(); ++i)
        CHECK(alphas[i] ==
              Catch::Approx(coordinate_oracle(sub, i, x, gamma)).margin(1e-9));
    }
  }
}

TEST_CASE("coordinates reject dimension mismatches") {
  const kg::Dataset ds = two_class_random(13, 5, 5, 3);
  const kos::Model model = kos::fit(ds, 1.0);
  const std::vector<double> wrong = {0.0};
  CHECK_THROWS_AS(kos::coordinates(model.subspaces[0], wrong, 1.0),
                  kg::data_error);
}

TEST_CASE("training points sit on their own full-rank subspace") {
  const kg::Dataset ds = two_class_random(14, 15, 10, 3);
  const double gamma = 1.1;
  const kos::Model model = kos::fit(ds, gamma);
  for (const kos::ClassSubspace& sub : model.subspaces) {
    // Full rank here: n-1 positive eigenvalues retained.
    REQUIRE(sub.eigenvalues.size() == sub.train_points.size() - 1);
    for (const auto& p : sub.train_points)
      CHECK(kos::distance(sub, p, gamma) <= 1e-6);
  }
}

TEST_CASE("far queries approach the limit fixed by the gram means") {
  const kg::Dataset ds = two_class_random(15, 8, 8, 2);
  const double gamma = 1.0;
  const kos::Model model = kos::fit(ds, gamma);
  const kos::ClassSubspace& sub = model.subspaces[0];

  // With every kernel value flushed to zero the centered column becomes
  // grand_mean - row_means and the query norm becomes 1 + grand_mean.
  double energy = 0.0;
  for (std::size_t i = 0; i < sub.eigenvalues.size(); ++i) {
    double dot = 0.0;
    for (std::size_t l = 0; l < sub.row_means.size(); ++l)
      dot += sub.eigenvectors[i][l] * (sub.grand_mean - sub.row_means[l]);
    const double alpha = dot / std::sqrt(sub.eigenvalues[i]);
    energy += alpha * alpha;
  }
  const double limit = std::sqrt(1.0 + sub.grand_mean - energy);

  const std::vector<double> far = {1e6, 1e6};
  CHECK(kos::distance(sub, far, gamma) == Catch::Approx(limit).margin(1e-12));
}

TEST_CASE("distances are never negative") {
  const kg::Dataset ds = two_class_random(16, 6, 6, 2);
  const kos::Model model = kos::fit(ds, 2.0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x = {u(rng), u(rng)};
    for (const kos::ClassSubspace& sub : model.subspaces)
      CHECK(kos::distance(sub, x, 2.0) >= 0.0);
  }
}

TEST_CASE("prediction picks the nearest blob") {
  kg::synth::BlobsSpec spec;
  spec.centers = {{0.0, 0.0}, {5.0, 0.0}, {0.0, 5.0}};
  spec.stddev = 0.4;
  spec.points_per_class = 30;
  spec.seed = 18;
  const kg::Dataset ds = kg::synth::make_blobs(spec);
  const kos::Model model = kos::fit(ds, 0.5);

  for (int c = 0; c < 3; ++c)
    CHECK(kos::predict(model, spec.centers[static_cast<std::size_t>(c)]) == c);
}

TEST_CASE("a one-class model always answers that class") {
  const kg::Dataset ds =
      kg::make_dataset({{7.0, {0.0, 0.0}}, {7.0, {1.0, 0.0}}, {7.0, {0.0, 1.0}}});
  const kos::Model model = kos::fit(ds, 1.0);
  const std::vector<double> anywhere = {100.0, -3.0};
  CHECK(kos::predict(model, anywhere) == 0);
}

TEST_CASE("exact distance ties resolve to the lowest class id") {
  // Mirror-image classes; any query on the mirror plane is equidistant by
  // construction, bit for bit.
  const kg::Dataset ds = kg::make_dataset({{0.0, {1.0, 0.0}},
                                           {0.0, {2.0, 0.0}},
                                           {1.0, {-1.0, 0.0}},
                                           {1.0, {-2.0, 0.0}}});
  const kos::Model model = kos::fit(ds, 0.7);
  for (double y : {0.0, 0.5, -1.25}) {
    const std::vector<double> on_plane = {0.0, y};
    const double d0 = kos::distance(model.subspaces[0], on_plane, 0.7);
    const double d1 = kos::distance(model.subspaces[1], on_plane, 0.7);
    REQUIRE(d0 == d1);
    CHECK(kos::predict(model, on_plane) == 0);
  }
}

TEST_CASE("prediction is invariant under intra-class permutation") {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, std::vector<double>>> rows;
  for (int i = 0; i < 36; ++i)
    rows.emplace_back(static_cast<double>(i % 2),
                      std::vector<double>{u(rng) + 1.8 * (i % 2), u(rng)});
  const kg::Dataset base = kg::make_dataset(rows);

  std::shuffle(rows.begin(), rows.end(), rng);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const kg::Dataset permuted = kg::make_dataset(rows);

  const kos::Model m0 = kos::fit(base, 1.0);
  const kos::Model m1 = kos::fit(permuted, 1.0);
  for (int i = 0; i < 40; ++i) {
    const std::vector<double> x = {u(rng) * 3.0 - 0.5, u(rng)};
    CHECK(kos::predict(m0, x) == kos::predict(m1, x));
  }
}

TEST_CASE("disabling the split changes nothing on balanced data") {
  const kg::Dataset ds = two_class_random(20, 12, 12, 3);
  kos::Options split_off;
  split_off.imbalance_factor = 1e18;
  const kos::Model a = kos::fit(ds, 1.0);
  const kos::Model b = kos::fit(ds, 1.0, split_off);
  REQUIRE(a.subspaces.size() == b.subspaces.size());
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 4.0);
  for (int i = 0; i < 30; ++i) {
    const std::vector<double> x = {u(rng), u(rng), u(rng)};
    CHECK(kos::predict(a, x) == kos::predict(b, x));
  }
}
