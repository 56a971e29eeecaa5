#include "pufm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pufm/errors.hpp"

namespace pufm {

void check_cloud(const PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("point cloud is empty");
  for (const Vec3& p : cloud)
    if (!finite(p)) throw std::invalid_argument("point cloud contains non-finite coordinates");
}

std::pair<PointCloud, NormParams> normalize(const PointCloud& cloud) {
  check_cloud(cloud);
  Vec3 centroid;
  for (const Vec3& p : cloud) centroid += p;
  centroid = centroid / static_cast<double>(cloud.size());

  double max_r2 = 0.0;
  for (const Vec3& p : cloud) max_r2 = std::max(max_r2, dist2(p, centroid));
  const double scale = std::sqrt(max_r2);
  if (scale <= 0.0) throw DegenerateInputError("all points coincide; cloud has no scale");

  PointCloud out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = (cloud[i] - centroid) / scale;
  return {std::move(out), NormParams{centroid, scale}};
}

PointCloud denormalize(const PointCloud& cloud, const NormParams& params) {
  PointCloud out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = cloud[i] * params.scale + params.centroid;
  return out;
}

PointCloud apply_normalization(const PointCloud& cloud, const NormParams& params) {
  PointCloud out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out[i] = (cloud[i] - params.centroid) / params.scale;
  return out;
}

namespace {

// Shared candidate ordering: nearer first, equal distances resolved by index.
// Both the brute-force path and the tree path must agree on this order.
struct Candidate {
  double d2;
  std::size_t idx;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && idx < o.idx);
  }
};

std::vector<std::size_t> brute_knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
  std::vector<Candidate> cands(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) cands[i] = {dist2(cloud[i], query), i};
  std::partial_sort(cands.begin(), cands.begin() + k, cands.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cands[i].idx;
  return out;
}

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

KdTree::KdTree(const PointCloud& cloud) : points_(cloud) {
  check_cloud(cloud);
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * points_.size() / kLeafSize + 4);
  root_ = build(0, points_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  Node node;
  node.box_min = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  node.box_max = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  for (std::size_t i = begin; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    for (int a = 0; a < 3; ++a) {
      node.box_min[a] = std::min(node.box_min[a], p[a]);
      node.box_max[a] = std::max(node.box_max[a], p[a]);
    }
  }

  const Vec3 extent = node.box_max - node.box_min;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;

  if (end - begin <= kLeafSize || extent[axis] == 0.0) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  node.axis = axis;
  node.split = points_[order_[mid]][axis];

  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

namespace {

// Bounded best-k list. Linear insert keeps the ordering identical to the
// brute-force partial_sort, including index tie-breaks.
struct BestK {
  std::vector<Candidate> items;
  std::size_t k;

  explicit BestK(std::size_t k_) : k(k_) { items.reserve(k_ + 1); }

  bool full() const { return items.size() == k; }
  double worst_d2() const {
    return full() ? items.back().d2 : std::numeric_limits<double>::infinity();
  }
  void offer(Candidate c) {
    if (full() && !(c < items.back())) return;
    auto pos = std::lower_bound(items.begin(), items.end(), c);
    items.insert(pos, c);
    if (items.size() > k) items.pop_back();
  }
};

}  // namespace

template <typename Visit>
void KdTree::search(int node_idx, const Vec3& query, double& worst, Visit&& visit) const {
  const Node& node = nodes_[node_idx];
  if (box_dist2(node.box_min, node.box_max, query) > worst) return;
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) visit(order_[i]);
    return;
  }
  const int near = query[node.axis] <= node.split ? node.left : node.right;
  const int far = near == node.left ? node.right : node.left;
  search(near, query, worst, visit);
  search(far, query, worst, visit);
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
  if (k == 0 || k > points_.size())
    throw std::invalid_argument("knn: k out of range [1, cloud size]");
  BestK best(k);
  double worst = std::numeric_limits<double>::infinity();
  search(root_, query, worst, [&](std::size_t idx) {
    best.offer({dist2(points_[idx], query), idx});
    worst = best.worst_d2();
  });
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = best.items[i].idx;
  return out;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& query) const {
  Candidate best{std::numeric_limits<double>::infinity(), 0};
  double worst = best.d2;
  search(root_, query, worst, [&](std::size_t idx) {
    Candidate c{dist2(points_[idx], query), idx};
    if (c < best) {
      best = c;
      worst = best.d2;
    }
  });
  return {best.idx, best.d2};
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
  check_cloud(cloud);
  if (k == 0 || k > cloud.size())
    throw std::invalid_argument("knn: k out of range [1, cloud size]");
  if (cloud.size() < kBruteForceLimit) return brute_knn(cloud, query, k);
  return KdTree(cloud).knn(query, k);
}

std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t m, std::size_t seed_index) {
  check_cloud(cloud);
  const std::size_t n = cloud.size();
  if (m == 0 || m > n) throw std::invalid_argument("fps: m out of range [1, cloud size]");
  if (seed_index >= n) throw std::invalid_argument("fps: seed index out of range");

  std::vector<std::size_t> selected;
  selected.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

  std::size_t current = seed_index;
  selected.push_back(current);
  min_d2[current] = -1.0;  // selected points sit strictly below any real distance
  for (std::size_t step = 1; step < m; ++step) {
    const Vec3 latest = cloud[current];
    std::size_t best = 0;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = dist2(cloud[i], latest);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
    selected.push_back(current);
    min_d2[current] = -1.0;
  }
  return selected;
}

PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = cloud[indices[i]];
  return out;
}

}  // namespace pufm
