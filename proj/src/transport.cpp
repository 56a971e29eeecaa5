#include "pufm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "pufm/errors.hpp"

namespace pufm {

CostMatrix cost_matrix(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cost_matrix: clouds must have equal cardinality");
  check_cloud(a);
  check_cloud(b);
  CostMatrix c;
  c.n = a.size();
  c.entries.resize(c.n * c.n);
  for (std::size_t i = 0; i < c.n; ++i)
    for (std::size_t j = 0; j < c.n; ++j) c(i, j) = dist(a[i], b[j]);
  return c;
}

namespace {

void check_cost(const CostMatrix& cost) {
  if (cost.n == 0 || cost.entries.size() != cost.n * cost.n)
    throw std::invalid_argument("assignment: cost matrix is not square");
  for (double v : cost.entries)
    if (!std::isfinite(v)) throw std::invalid_argument("assignment: non-finite cost entry");
}

}  // namespace

// Shortest augmenting path with dual potentials; rows are inserted in index
// order, which fixes the tie behaviour.
Assignment assign_exact(const CostMatrix& cost) {
  check_cost(cost);
  const std::size_t n = cost.n;
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based with a virtual column 0, in the classic formulation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_to(n + 1);
  std::vector<std::size_t> owner(n + 1, 0), prev_col(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t j0 = 0;
    std::fill(min_to.begin(), min_to.end(), inf);
    std::fill(used.begin(), used.end(), char{0});
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_to[j]) {
          min_to[j] = reduced;
          prev_col[j] = j0;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    // Augment along the alternating path back to the virtual column.
    do {
      const std::size_t j1 = prev_col[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment a;
  a.perm.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) a.perm[owner[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) a.cost += cost(i, a.perm[i]);
  return a;
}

// Forward auction on the negated cost (maximization form). Persons bid in FIFO
// order; ties on object values resolve to the lowest column. Prices persist
// across scaling rounds, which is what makes the scaling effective.
Assignment assign_auction(const CostMatrix& cost, double epsilon) {
  check_cost(cost);
  if (!(epsilon > 0.0)) throw std::invalid_argument("assign_auction: epsilon must be > 0");
  const std::size_t n = cost.n;

  double lo = cost.entries[0], hi = cost.entries[0];
  for (double c : cost.entries) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const double range = hi - lo;

  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> person_of(n, n), object_of(n, n);  // n = unassigned
  const std::size_t scaling = 4;
  double eps = std::max(epsilon, range / 2.0);

  // Every bid raises some price by at least eps, and prices are bounded, so
  // termination is guaranteed; the cap is a hard guard for the error contract.
  const std::uint64_t bid_cap = 10'000ULL * n + 1'000'000ULL;
  std::uint64_t bids = 0;

  while (true) {
    std::deque<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
      object_of[i] = n;
      pending.push_back(i);
    }
    std::fill(person_of.begin(), person_of.end(), n);

    while (!pending.empty()) {
      if (++bids > bid_cap)
        throw ConvergenceError("assign_auction: bid cap exhausted");
      const std::size_t i = pending.front();
      pending.pop_front();

      // Value of object j for person i is -cost - price; track best and runner-up.
      double best_v = -std::numeric_limits<double>::infinity();
      double second_v = -std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = -cost(i, j) - price[j];
        if (v > best_v) {
          second_v = best_v;
          best_v = v;
          best_j = j;
        } else if (v > second_v) {
          second_v = v;
        }
      }
      if (n == 1) second_v = best_v;

      price[best_j] += best_v - second_v + eps;
      const std::size_t displaced = person_of[best_j];
      if (displaced != n) {
        object_of[displaced] = n;
        pending.push_back(displaced);
      }
      person_of[best_j] = i;
      object_of[i] = best_j;
    }

    if (eps <= epsilon) break;
    eps = std::max(epsilon, eps / static_cast<double>(scaling));
  }

  Assignment a;
  a.perm.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) a.perm[i] = object_of[i];
  for (std::size_t i = 0; i < n; ++i) a.cost += cost(i, a.perm[i]);
  return a;
}

Assignment assign(const CostMatrix& cost, const TransportConfig& cfg) {
  if (cost.n <= cfg.exact_max_n) return assign_exact(cost);
  return assign_auction(cost, cfg.epsilon);
}

PointCloud align(const PointCloud& dense, const Assignment& a) {
  if (dense.size() != a.perm.size())
    throw std::invalid_argument("align: permutation length does not match cloud");
  PointCloud out(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) out[i] = dense[a.perm[i]];
  return out;
}

}  // namespace pufm
