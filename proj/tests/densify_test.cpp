#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "pufm/densify.hpp"
#include "pufm/rng.hpp"

using namespace pufm;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  PointCloud out(n);
  for (auto& p : out) p = {u(rng), u(rng), u(rng)};
  return out;
}

}  // namespace

TEST_SUITE("densify") {
  TEST_CASE("output is replica-major midpoints") {
    // Collinear points; nearest-neighbor ties resolve to the lower index.
    const PointCloud sparse{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    DensifyConfig cfg;
    cfg.gamma = 2;
    cfg.eta = 0.0;
    const PointCloud out = midpoint_densify(sparse, cfg);
    REQUIRE(out.size() == 8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == sparse[i]);  // replica 0 = self
    CHECK(out[4].x == doctest::Approx(0.5));
    CHECK(out[5].x == doctest::Approx(0.5));
    CHECK(out[6].x == doctest::Approx(1.5));
    CHECK(out[7].x == doctest::Approx(2.5));
  }

  TEST_CASE("midpoints land between the point and a neighbor") {
    const PointCloud sparse = random_cloud(50, 17);
    DensifyConfig cfg;
    cfg.gamma = 4;
    cfg.eta = 0.0;
    const PointCloud out = midpoint_densify(sparse, cfg);
    REQUIRE(out.size() == 200);
    for (std::size_t j = 1; j < 4; ++j) {
      for (std::size_t i = 0; i < 50; ++i) {
        // 2*mid - p_i must be some input point (the chosen partner).
        const Vec3 partner = out[j * 50 + i] * 2.0 - sparse[i];
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : sparse) best = std::min(best, dist(partner, q));
        CHECK(best < 1e-9);
      }
    }
  }

  TEST_CASE("deterministic for a fixed seed, noise scales with eta") {
    const PointCloud sparse = random_cloud(64, 5);
    DensifyConfig cfg;
    cfg.gamma = 4;
    cfg.eta = 0.02;
    cfg.rng_seed = 99;
    const PointCloud a = midpoint_densify(sparse, cfg);
    const PointCloud b = midpoint_densify(sparse, cfg);
    CHECK(a == b);

    cfg.eta = 0.0;
    const PointCloud clean = midpoint_densify(sparse, cfg);
    double mean_sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean_sq += dist2(a[i], clean[i]);
    mean_sq /= static_cast<double>(a.size());
    // E||noise||^2 = 3 * eta^2
    CHECK(mean_sq == doctest::Approx(3 * 0.02 * 0.02).epsilon(0.25));
  }

  TEST_CASE("different seeds give different noise") {
    const PointCloud sparse = random_cloud(32, 6);
    DensifyConfig cfg;
    cfg.gamma = 2;
    cfg.eta = 0.01;
    cfg.rng_seed = 1;
    const PointCloud a = midpoint_densify(sparse, cfg);
    cfg.rng_seed = 2;
    const PointCloud b = midpoint_densify(sparse, cfg);
    CHECK(a != b);
  }

  TEST_CASE("coincident points still find distinct partners") {
    PointCloud sparse(10, Vec3{1, 1, 1});
    sparse.push_back({2, 2, 2});
    DensifyConfig cfg;
    cfg.gamma = 4;
    cfg.eta = 0.0;
    const PointCloud out = midpoint_densify(sparse, cfg);
    CHECK(out.size() == 44);
    for (const Vec3& p : out) CHECK(finite(p));
  }

  TEST_CASE("rejects clouds smaller than gamma") {
    DensifyConfig cfg;
    cfg.gamma = 4;
    CHECK_THROWS_AS(midpoint_densify(random_cloud(3, 1), cfg), std::invalid_argument);
  }

  TEST_CASE("gamma 1 with zero eta is the identity") {
    const PointCloud sparse = random_cloud(20, 9);
    DensifyConfig cfg;
    cfg.gamma = 1;
    cfg.eta = 0.0;
    CHECK(midpoint_densify(sparse, cfg) == sparse);
  }
}
