#include <algorithm>
#include <numeric>

#include <doctest.h>

#include "pufm/rng.hpp"
#include "pufm/transport.hpp"

using namespace pufm;

namespace {

CostMatrix random_cost(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  CostMatrix c;
  c.n = n;
  c.entries.resize(n * n);
  for (double& v : c.entries) v = u(rng);
  return c;
}

// Exhaustive minimum over all n! permutations.
double brute_min_cost(const CostMatrix& c) {
  std::vector<std::size_t> perm(c.n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) total += c(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation_of_n(const std::vector<std::size_t>& perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

double perm_cost(const CostMatrix& c, const std::vector<std::size_t>& perm) {
  double total = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) total += c(i, perm[i]);
  return total;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("cost_matrix holds pairwise distances") {
    const PointCloud a{{0, 0, 0}, {1, 0, 0}};
    const PointCloud b{{0, 3, 4}, {1, 0, 0}};
    const CostMatrix c = cost_matrix(a, b);
    CHECK(c.n == 2);
    CHECK(c(0, 0) == doctest::Approx(5.0));
    CHECK(c(0, 1) == doctest::Approx(1.0));
    CHECK(c(1, 1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cost_matrix(a, PointCloud{{0, 0, 0}}), std::invalid_argument);
  }

  TEST_CASE("exact solver equals brute force for small n") {
    for (std::size_t n = 1; n <= 7; ++n) {
      for (std::uint64_t s = 0; s < 8; ++s) {
        const CostMatrix c = random_cost(n, 100 * n + s);
        const Assignment a = assign_exact(c);
        REQUIRE(is_permutation_of_n(a.perm, n));
        CHECK(a.cost == doctest::Approx(perm_cost(c, a.perm)).epsilon(1e-12));
        CHECK(a.cost == doctest::Approx(brute_min_cost(c)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("exact solver is deterministic") {
    const CostMatrix c = random_cost(40, 9);
    const Assignment a = assign_exact(c);
    const Assignment b = assign_exact(c);
    CHECK(a.perm == b.perm);
    CHECK(a.cost == b.cost);
  }

  TEST_CASE("auction stays within n*epsilon of the optimum") {
    const double eps = 1e-3;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const std::size_t n = 60;
      const CostMatrix c = random_cost(n, 500 + s);
      const Assignment exact = assign_exact(c);
      const Assignment approx = assign_auction(c, eps);
      REQUIRE(is_permutation_of_n(approx.perm, n));
      CHECK(approx.cost == doctest::Approx(perm_cost(c, approx.perm)).epsilon(1e-12));
      CHECK(approx.cost <= exact.cost + static_cast<double>(n) * eps + 1e-12);
      CHECK(approx.cost >= exact.cost - 1e-12);
    }
  }

  TEST_CASE("auction handles n = 1") {
    CostMatrix c;
    c.n = 1;
    c.entries = {3.5};
    const Assignment a = assign_auction(c, 1e-3);
    CHECK(a.perm == std::vector<std::size_t>{0});
    CHECK(a.cost == doctest::Approx(3.5));
  }

  TEST_CASE("assign dispatches on matrix size") {
    const CostMatrix small = random_cost(6, 1);
    TransportConfig cfg;
    cfg.exact_max_n = 4;
    cfg.epsilon = 1e-3;
    const Assignment via_auction = assign(small, cfg);
    const Assignment exact = assign_exact(small);
    CHECK(via_auction.cost <= exact.cost + 6 * cfg.epsilon + 1e-12);
    cfg.exact_max_n = 512;
    const Assignment via_exact = assign(small, cfg);
    CHECK(via_exact.cost == doctest::Approx(exact.cost).epsilon(1e-12));
  }

  TEST_CASE("align permutes the dense cloud") {
    const PointCloud dense{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    Assignment a;
    a.perm = {2, 0, 1};
    const PointCloud out = align(dense, a);
    CHECK(out == PointCloud{{2, 2, 2}, {0, 0, 0}, {1, 1, 1}});
    a.perm = {0, 1};
    CHECK_THROWS_AS(align(dense, a), std::invalid_argument);
  }

  TEST_CASE("alignment pairs each source with a distinct target") {
    Rng rng = make_rng(321);
    std::uniform_real_distribution<double> u(-1, 1);
    PointCloud a(30), b(30);
    for (auto& p : a) p = {u(rng), u(rng), u(rng)};
    for (auto& p : b) p = {u(rng), u(rng), u(rng)};
    const Assignment as = assign(cost_matrix(a, b));
    CHECK(is_permutation_of_n(as.perm, 30));
  }

  TEST_CASE("assignment cache computes once per key") {
    AssignmentCache cache;
    int calls = 0;
    auto compute = [&] {
      ++calls;
      Assignment a;
      a.perm = {0};
      a.cost = 1.0;
      return a;
    };
    cache.get_or_compute(1, 2, compute);
    cache.get_or_compute(1, 2, compute);
    CHECK(calls == 1);
    cache.get_or_compute(1, 3, compute);
    CHECK(calls == 2);
    CHECK(cache.size() == 2);
    cache.clear();
    CHECK(cache.size() == 0);
    cache.get_or_compute(1, 2, compute);
    CHECK(calls == 3);
  }
}
