#include "pufm/densify.hpp"

#include <stdexcept>

#include "pufm/rng.hpp"

namespace pufm {

PointCloud midpoint_densify(const PointCloud& sparse, const DensifyConfig& cfg) {
  check_cloud(sparse);
  if (cfg.gamma < 1) throw std::invalid_argument("densify: gamma must be >= 1");
  if (cfg.eta < 0.0) throw std::invalid_argument("densify: eta must be >= 0");
  const std::size_t m = sparse.size();
  if (m < cfg.gamma)
    throw std::invalid_argument("densify: need at least gamma points to pick distinct partners");

  // partners[i] holds the gamma-1 nearest non-self neighbors of point i,
  // nearest first. With duplicated points the self index may not lead the knn
  // list, so query one extra and drop i wherever it lands.
  std::vector<std::vector<std::size_t>> partners(m);
  if (cfg.gamma > 1) {
    const KdTree tree(sparse);
    for (std::size_t i = 0; i < m; ++i) {
      auto near = tree.knn(sparse[i], std::min(m, cfg.gamma));
      auto& list = partners[i];
      for (std::size_t idx : near)
        if (idx != i) list.push_back(idx);
      if (list.size() > cfg.gamma - 1) list.resize(cfg.gamma - 1);
      std::size_t k = std::min(m, cfg.gamma);
      while (list.size() < cfg.gamma - 1 && k < m) {
        // i was absent from the top-k (possible among coincident points);
        // widen until it drops out of the candidate window.
        k = std::min(m, k + cfg.gamma);
        auto wider = tree.knn(sparse[i], k);
        list.clear();
        for (std::size_t idx : wider)
          if (idx != i && list.size() < cfg.gamma - 1) list.push_back(idx);
      }
    }
  }

  PointCloud out(cfg.gamma * m);
  for (std::size_t j = 0; j < cfg.gamma; ++j)
    for (std::size_t i = 0; i < m; ++i)
      out[j * m + i] = j == 0 ? sparse[i] : (sparse[i] + sparse[partners[i][j - 1]]) * 0.5;

  if (cfg.eta > 0.0) {
    Rng rng = make_rng(cfg.rng_seed);
    for (Vec3& p : out) p += cfg.eta * normal_vec3(rng);
  }
  return out;
}

}  // namespace pufm
