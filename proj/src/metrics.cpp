#include "pufm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pufm {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

std::size_t drop_degenerate_faces(TriangleMesh& mesh) {
  const std::size_t before = mesh.faces.size();
  std::erase_if(mesh.faces, [&](const std::array<int, 3>& f) {
    return triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) <= 0.0;
  });
  return before - mesh.faces.size();
}

namespace {

// Nearest-neighbor squared distances from each point of `from` into `to`.
std::vector<double> nn_dist2(const PointCloud& from, const PointCloud& to) {
  std::vector<double> out(from.size());
  if (to.size() < kBruteForceLimit) {
    for (std::size_t i = 0; i < from.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, dist2(from[i], q));
      out[i] = best;
    }
  } else {
    const KdTree tree(to);
    for (std::size_t i = 0; i < from.size(); ++i) out[i] = tree.nearest(from[i]).second;
  }
  return out;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  check_cloud(a);
  check_cloud(b);
  return mean(nn_dist2(a, b)) + mean(nn_dist2(b, a));
}

double hausdorff(const PointCloud& a, const PointCloud& b) {
  check_cloud(a);
  check_cloud(b);
  const auto ab = nn_dist2(a, b);
  const auto ba = nn_dist2(b, a);
  const double worst2 =
      std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
  return std::sqrt(worst2);
}

// Ericson-style closest point on triangle.
double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return dist2(p, a);

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return dist2(p, b);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return dist2(p, a + ab * v);
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return dist2(p, c);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return dist2(p, a + ac * w);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return dist2(p, b + (c - b) * w);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return dist2(p, a + ab * v + ac * w);
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : vertices_(mesh.vertices) {
  TriangleMesh filtered = mesh;
  dropped_ = drop_degenerate_faces(filtered);
  faces_ = std::move(filtered.faces);
  if (faces_.empty()) return;

  centroids_.resize(faces_.size());
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const auto& f = faces_[i];
    centroids_[i] = (vertices_[f[0]] + vertices_[f[1]] + vertices_[f[2]]) / 3.0;
  }
  order_.resize(faces_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * faces_.size() / kLeafFaces + 4);
  root_ = build(0, faces_.size());
}

int TriangleBvh::build(std::size_t begin, std::size_t end) {
  Node node;
  const double inf = std::numeric_limits<double>::infinity();
  node.box_min = {inf, inf, inf};
  node.box_max = {-inf, -inf, -inf};
  Vec3 cmin = {inf, inf, inf}, cmax = {-inf, -inf, -inf};
  for (std::size_t i = begin; i < end; ++i) {
    const auto& f = faces_[order_[i]];
    for (int v = 0; v < 3; ++v) {
      const Vec3& p = vertices_[f[v]];
      for (int a = 0; a < 3; ++a) {
        node.box_min[a] = std::min(node.box_min[a], p[a]);
        node.box_max[a] = std::max(node.box_max[a], p[a]);
      }
    }
    const Vec3& c = centroids_[order_[i]];
    for (int a = 0; a < 3; ++a) {
      cmin[a] = std::min(cmin[a], c[a]);
      cmax[a] = std::max(cmax[a], c[a]);
    }
  }

  const Vec3 extent = cmax - cmin;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;

  if (end - begin <= kLeafFaces || extent[axis] == 0.0) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     return centroids_[a][axis] < centroids_[b][axis] ||
                            (centroids_[a][axis] == centroids_[b][axis] && a < b);
                   });

  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

namespace {

double box_dist2(const Vec3& lo, const Vec3& hi, const Vec3& q) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double v = q[a];
    if (v < lo[a]) d2 += (lo[a] - v) * (lo[a] - v);
    else if (v > hi[a]) d2 += (v - hi[a]) * (v - hi[a]);
  }
  return d2;
}

}  // namespace

void TriangleBvh::query(int node_idx, const Vec3& p, double& best) const {
  const Node& node = nodes_[node_idx];
  if (box_dist2(node.box_min, node.box_max, p) >= best) return;
  if (node.left < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const auto& f = faces_[order_[i]];
      best = std::min(best,
                      point_triangle_dist2(p, vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]));
    }
    return;
  }
  // Visit the closer child first so pruning bites sooner.
  const double dl = box_dist2(nodes_[node.left].box_min, nodes_[node.left].box_max, p);
  const double dr = box_dist2(nodes_[node.right].box_min, nodes_[node.right].box_max, p);
  const int first = dl <= dr ? node.left : node.right;
  const int second = first == node.left ? node.right : node.left;
  query(first, p, best);
  query(second, p, best);
}

double TriangleBvh::nearest_dist2(const Vec3& p) const {
  if (faces_.empty()) throw std::invalid_argument("TriangleBvh: mesh has no usable faces");
  double best = std::numeric_limits<double>::infinity();
  query(root_, p, best);
  return best;
}

double point_to_face(const PointCloud& points, const TriangleMesh& mesh) {
  check_cloud(points);
  const TriangleBvh bvh(mesh);
  if (bvh.face_count() == 0)
    throw std::invalid_argument("point_to_face: mesh empty after degenerate-face filtering");
  double sum = 0.0;
  for (const Vec3& p : points) sum += std::sqrt(bvh.nearest_dist2(p));
  return sum / static_cast<double>(points.size());
}

namespace {

// Unit bounding-box transform of the reference cloud: center on the box
// center, divide by the largest extent.
std::pair<Vec3, double> unit_box_transform(const PointCloud& reference) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec3 lo = {inf, inf, inf}, hi = {-inf, -inf, -inf};
  for (const Vec3& p : reference)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  const Vec3 extent = hi - lo;
  const double scale = std::max({extent.x, extent.y, extent.z});
  return {(lo + hi) * 0.5, scale > 0.0 ? scale : 1.0};
}

PointCloud apply_transform(const PointCloud& cloud, const Vec3& center, double scale) {
  PointCloud out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = (cloud[i] - center) / scale;
  return out;
}

}  // namespace

EvalReport evaluate_clouds(const PointCloud& pred, const PointCloud& gt, const TriangleMesh* mesh) {
  check_cloud(pred);
  check_cloud(gt);
  EvalReport report;
  report.pred_count = pred.size();
  report.gt_count = gt.size();
  auto [center, scale] = unit_box_transform(gt);
  report.box_center = center;
  report.box_scale = scale;

  const PointCloud p = apply_transform(pred, center, scale);
  const PointCloud g = apply_transform(gt, center, scale);
  report.cd = chamfer(p, g);
  report.hd = hausdorff(p, g);
  if (mesh) {
    TriangleMesh m = *mesh;
    for (Vec3& v : m.vertices) v = (v - center) / scale;
    report.p2f = point_to_face(p, m);
  }
  return report;
}

std::string to_key_value(const EvalReport& report) {
  std::ostringstream os;
  os.precision(9);
  if (!report.pred_source.empty()) os << "pred=" << report.pred_source << "\n";
  if (!report.gt_source.empty()) os << "gt=" << report.gt_source << "\n";
  if (!report.mesh_source.empty()) os << "mesh=" << report.mesh_source << "\n";
  os << "pred_count=" << report.pred_count << "\n";
  os << "gt_count=" << report.gt_count << "\n";
  os << "box_center=" << report.box_center.x << " " << report.box_center.y << " "
     << report.box_center.z << "\n";
  os << "box_scale=" << report.box_scale << "\n";
  os << "cd=" << report.cd << "\n";
  os << "hd=" << report.hd << "\n";
  if (report.p2f) os << "p2f=" << *report.p2f << "\n";
  return os.str();
}

}  // namespace pufm
