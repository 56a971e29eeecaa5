#pragma once

#include <optional>
#include <string>

#include "pufm/geometry.hpp"
#include "pufm/mesh.hpp"

namespace pufm {

// Symmetric Chamfer distance: mean squared nearest distance a->b plus the same
// b->a. Throws std::invalid_argument on empty input.
double chamfer(const PointCloud& a, const PointCloud& b);

// Symmetric Hausdorff distance: max over both directions of the worst
// nearest-neighbor Euclidean (unsquared) distance.
double hausdorff(const PointCloud& a, const PointCloud& b);

// Exact squared distance from p to triangle abc (closest point clamped to the
// triangle via barycentric region tests).
double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Static AABB tree over mesh faces for nearest-triangle queries. Degenerate
// faces are dropped at construction (count available for reporting).
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriangleMesh& mesh);

  double nearest_dist2(const Vec3& p) const;
  std::size_t face_count() const { return faces_.size(); }
  std::size_t degenerate_dropped() const { return dropped_; }

 private:
  struct Node {
    Vec3 box_min, box_max;
    int left = -1, right = -1;
    std::size_t begin = 0, end = 0;  // leaf face range
  };

  int build(std::size_t begin, std::size_t end);
  void query(int node, const Vec3& p, double& best) const;

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<std::size_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t dropped_ = 0;

  static constexpr std::size_t kLeafFaces = 4;
};

// Mean unsigned distance from each point to its nearest mesh triangle
// (prediction-to-surface direction only). Throws std::invalid_argument when
// no non-degenerate faces remain.
double point_to_face(const PointCloud& points, const TriangleMesh& mesh);

// Metric block for one evaluated shape. Metrics are computed after both clouds
// (and the mesh, when present) are rescaled by the ground truth's unit
// bounding-box transform; that transform is recorded here.
struct EvalReport {
  double cd = 0.0;
  double hd = 0.0;
  std::optional<double> p2f;
  std::size_t pred_count = 0;
  std::size_t gt_count = 0;
  Vec3 box_center;
  double box_scale = 1.0;
  std::string pred_source, gt_source, mesh_source;
};

EvalReport evaluate_clouds(const PointCloud& pred, const PointCloud& gt,
                           const TriangleMesh* mesh = nullptr);

// Line-oriented key=value serialization.
std::string to_key_value(const EvalReport& report);

}  // namespace pufm
