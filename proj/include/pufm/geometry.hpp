#pragma once

#include <cstddef>
#include <vector>

#include "pufm/vec3.hpp"

namespace pufm {

// Ordered sequence of 3D points. Order is meaningful: after transport
// alignment, index i of one cloud is paired with index i of the other.
using PointCloud = std::vector<Vec3>;

// Inverse map of normalize(): p_original = p_normalized * scale + centroid.
struct NormParams {
  Vec3 centroid;
  double scale = 1.0;  // > 0
};

// Throws std::invalid_argument if the cloud is empty or has non-finite coords.
void check_cloud(const PointCloud& cloud);

// Centers the cloud on its centroid and scales so the farthest point sits on
// the unit sphere. Throws DegenerateInputError when all points coincide.
std::pair<PointCloud, NormParams> normalize(const PointCloud& cloud);
PointCloud denormalize(const PointCloud& cloud, const NormParams& params);

// Forward map of normalize() under known params: (p - centroid) / scale.
PointCloud apply_normalization(const PointCloud& cloud, const NormParams& params);

// Static k-d tree over a point cloud (median splits, longest axis). Immutable
// after construction; safe to share across threads.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud);

  // k nearest indices, ascending by distance, ties on ascending index.
  // Throws std::invalid_argument if k > size or k == 0.
  std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

  // Index of the single nearest point plus its squared distance.
  std::pair<std::size_t, double> nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis = -1;          // -1 marks a leaf
    double split = 0.0;
    std::size_t begin = 0, end = 0;  // leaf range into order_
    int left = -1, right = -1;
    Vec3 box_min, box_max;
  };

  int build(std::size_t begin, std::size_t end);
  template <typename Visit>
  void search(int node, const Vec3& query, double& worst, Visit&& visit) const;

  PointCloud points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;

  static constexpr std::size_t kLeafSize = 16;
};

// Brute-force-backed for small clouds, k-d tree above kBruteForceLimit.
// Same contract as KdTree::knn.
std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k);

inline constexpr std::size_t kBruteForceLimit = 64;

// Farthest point sampling. First pick is seed_index, then greedily the point
// maximizing its min squared distance to the selected set; ties break on the
// lowest index. Throws std::invalid_argument when m is out of [1, size].
std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t m, std::size_t seed_index = 0);

// Convenience: gather cloud[idx] for each idx.
PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& indices);

}  // namespace pufm
