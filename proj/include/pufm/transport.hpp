#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "pufm/geometry.hpp"

namespace pufm {

// Dense n x n matrix of unsquared Euclidean distances, row = source index,
// column = target index.
struct CostMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major, n*n

  double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries[i * n + j]; }
};

// Bijective assignment: perm[i] is the target index matched to source i.
struct Assignment {
  std::vector<std::size_t> perm;
  double cost = 0.0;  // sum of matched distances
};

// entries(i,j) = ||a[i] - b[j]||_2. Throws std::invalid_argument on a
// cardinality mismatch.
CostMatrix cost_matrix(const PointCloud& a, const PointCloud& b);

// Minimum-total-cost perfect matching via the Jonker-Volgenant style
// shortest-augmenting-path algorithm (O(n^3)). Deterministic: equal-cost
// optima resolve by the fixed row scan order.
Assignment assign_exact(const CostMatrix& cost);

// Bertsekas auction with epsilon scaling. The returned assignment satisfies
// cost <= optimal + n * epsilon. Throws ConvergenceError if the bid cap is
// exhausted (should not happen on finite inputs).
Assignment assign_auction(const CostMatrix& cost, double epsilon);

struct TransportConfig {
  std::size_t exact_max_n = 512;  // exact solver up to here, auction beyond
  double epsilon = 1e-3;
};

// Dispatch between the exact and auction solvers on matrix size.
Assignment assign(const CostMatrix& cost, const TransportConfig& cfg = {});

// output[i] = dense[a.perm[i]]. Throws std::invalid_argument on length mismatch.
PointCloud align(const PointCloud& dense, const Assignment& a);

// Keyed by (patch id, densification seed); values are deterministic, so
// concurrent duplicate inserts are benign.
class AssignmentCache {
 public:
  template <typename Compute>
  Assignment get_or_compute(std::uint64_t patch_id, std::uint64_t densify_seed, Compute&& compute) {
    const Key key{patch_id, densify_seed};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    Assignment a = compute();
    std::lock_guard<std::mutex> lock(mutex_);
    map_.insert_or_assign(key, a);
    return a;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    map_.clear();
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.size();
  }

 private:
  using Key = std::pair<std::uint64_t, std::uint64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return k.first * 0x9e3779b97f4a7c15ULL ^ (k.second + 0x517cc1b727220a95ULL);
    }
  };
  mutable std::mutex mutex_;
  std::unordered_map<Key, Assignment, KeyHash> map_;
};

}  // namespace pufm
