#include "pufm/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "pufm/io.hpp"
#include "pufm/metrics.hpp"

namespace pufm {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string("shape spec: ") + what +
                                              " must be positive");
}

void validate(const ShapeSpec& spec) {
  switch (spec.kind) {
    case ShapeKind::kSphere:
      require_positive(spec.radius, "sphere radius");
      break;
    case ShapeKind::kTorus:
      require_positive(spec.major, "torus major radius");
      require_positive(spec.minor, "torus minor radius");
      if (spec.minor >= spec.major)
        throw std::invalid_argument("shape spec: torus needs minor < major");
      break;
    case ShapeKind::kPlaneBump:
      require_positive(spec.extent, "plane extent");
      require_positive(spec.bump_height, "bump height");
      require_positive(spec.bump_width, "bump width");
      break;
    case ShapeKind::kRing2d:
      require_positive(spec.r_outer, "ring outer radius");
      if (spec.r_inner < 0.0 || spec.r_inner >= spec.r_outer)
        throw std::invalid_argument("shape spec: ring needs 0 <= inner < outer");
      break;
    case ShapeKind::kLetter2d:
      break;
    case ShapeKind::kMeshFile:
      if (spec.mesh_path.empty()) throw std::invalid_argument("shape spec: mesh path is empty");
      break;
  }
}

std::vector<double> parse_params(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("shape spec: bad parameter '" + item + "'");
    }
  }
  return out;
}

// The letter "F" as three axis-aligned rectangles in the z = 0 plane.
struct Rect {
  double x0, x1, y0, y1;
  double area() const { return (x1 - x0) * (y1 - y0); }
};
constexpr Rect kLetterRects[] = {
    {-0.50, -0.20, -0.50, 0.50},  // stem
    {-0.20, 0.50, 0.30, 0.50},    // top bar
    {-0.20, 0.30, -0.05, 0.15},   // middle bar
};

}  // namespace

ShapeSpec parse_shape(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (colon != std::string::npos && rest.empty())
    throw std::invalid_argument("shape spec: empty parameter list in '" + text + "'");

  ShapeSpec spec;
  if (kind == "sphere") {
    spec.kind = ShapeKind::kSphere;
    const auto p = parse_params(rest);
    if (p.size() > 1) throw std::invalid_argument("shape spec: sphere takes 1 parameter");
    if (!p.empty()) spec.radius = p[0];
  } else if (kind == "torus") {
    spec.kind = ShapeKind::kTorus;
    const auto p = parse_params(rest);
    if (p.size() != 0 && p.size() != 2)
      throw std::invalid_argument("shape spec: torus takes 2 parameters");
    if (p.size() == 2) {
      spec.major = p[0];
      spec.minor = p[1];
    }
  } else if (kind == "bump") {
    spec.kind = ShapeKind::kPlaneBump;
    const auto p = parse_params(rest);
    if (p.size() != 0 && p.size() != 3)
      throw std::invalid_argument("shape spec: bump takes 3 parameters");
    if (p.size() == 3) {
      spec.extent = p[0];
      spec.bump_height = p[1];
      spec.bump_width = p[2];
    }
  } else if (kind == "ring") {
    spec.kind = ShapeKind::kRing2d;
    const auto p = parse_params(rest);
    if (p.size() != 0 && p.size() != 2)
      throw std::invalid_argument("shape spec: ring takes 2 parameters");
    if (p.size() == 2) {
      spec.r_inner = p[0];
      spec.r_outer = p[1];
    }
  } else if (kind == "letter") {
    spec.kind = ShapeKind::kLetter2d;
    if (!rest.empty()) throw std::invalid_argument("shape spec: letter takes no parameters");
  } else if (kind == "mesh") {
    spec.kind = ShapeKind::kMeshFile;
    if (rest.empty()) throw std::invalid_argument("shape spec: mesh needs a path");
    spec.mesh_path = rest;
  } else {
    throw std::invalid_argument("shape spec: unknown kind '" + kind + "'");
  }
  validate(spec);
  return spec;
}

std::string to_string(const ShapeSpec& spec) {
  std::ostringstream os;
  os.precision(9);
  switch (spec.kind) {
    case ShapeKind::kSphere: os << "sphere:" << spec.radius; break;
    case ShapeKind::kTorus: os << "torus:" << spec.major << "," << spec.minor; break;
    case ShapeKind::kPlaneBump:
      os << "bump:" << spec.extent << "," << spec.bump_height << "," << spec.bump_width;
      break;
    case ShapeKind::kRing2d: os << "ring:" << spec.r_inner << "," << spec.r_outer; break;
    case ShapeKind::kLetter2d: os << "letter"; break;
    case ShapeKind::kMeshFile: os << "mesh:" << spec.mesh_path; break;
  }
  return os.str();
}

namespace {

Vec3 sample_sphere(double radius, Rng& rng) {
  for (;;) {
    const Vec3 g = normal_vec3(rng);
    const double len = norm(g);
    if (len > 1e-12) return g * (radius / len);
  }
}

Vec3 sample_torus(double major, double minor, Rng& rng) {
  for (;;) {
    const double u = 2.0 * kPi * uniform01(rng);
    const double v = 2.0 * kPi * uniform01(rng);
    // Rejection weight keeps area density uniform across the tube angle.
    if (uniform01(rng) * (major + minor) > major + minor * std::cos(v)) continue;
    const double ring = major + minor * std::cos(v);
    return {ring * std::cos(u), ring * std::sin(u), minor * std::sin(v)};
  }
}

Vec3 sample_bump(const ShapeSpec& s, Rng& rng) {
  const double half = 0.5 * s.extent;
  const double g_max = s.bump_height / s.bump_width * std::exp(-0.5);
  const double w_max = std::sqrt(1.0 + g_max * g_max);
  for (;;) {
    const double x = (2.0 * uniform01(rng) - 1.0) * half;
    const double y = (2.0 * uniform01(rng) - 1.0) * half;
    const double rho2 = x * x + y * y;
    const double e = std::exp(-rho2 / (2.0 * s.bump_width * s.bump_width));
    const double g = s.bump_height * std::sqrt(rho2) / (s.bump_width * s.bump_width) * e;
    // Area element is sqrt(1 + |grad z|^2) dx dy; reject to match it.
    if (uniform01(rng) * w_max > std::sqrt(1.0 + g * g)) continue;
    return {x, y, s.bump_height * e};
  }
}

Vec3 sample_ring(double r_inner, double r_outer, Rng& rng) {
  const double theta = 2.0 * kPi * uniform01(rng);
  const double rho =
      std::sqrt(r_inner * r_inner + uniform01(rng) * (r_outer * r_outer - r_inner * r_inner));
  return {rho * std::cos(theta), rho * std::sin(theta), 0.0};
}

Vec3 sample_letter(Rng& rng) {
  double total = 0.0;
  for (const Rect& r : kLetterRects) total += r.area();
  double pick = uniform01(rng) * total;
  const Rect* rect = &kLetterRects[0];
  for (const Rect& r : kLetterRects) {
    if (pick < r.area()) {
      rect = &r;
      break;
    }
    pick -= r.area();
  }
  return {rect->x0 + uniform01(rng) * (rect->x1 - rect->x0),
          rect->y0 + uniform01(rng) * (rect->y1 - rect->y0), 0.0};
}

}  // namespace

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_mesh: n must be positive");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_mesh: mesh has zero surface area");

  PointCloud out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform01(rng) * total;
    const std::size_t fi = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
    double u = uniform01(rng), v = uniform01(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3 a = mesh.vertices[f[0]];
    out.push_back(a + (mesh.vertices[f[1]] - a) * u + (mesh.vertices[f[2]] - a) * v);
  }
  return out;
}

PointCloud sample_shape(const ShapeSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_shape: n must be positive");
  validate(spec);

  const std::size_t raw_n = n * std::max<std::size_t>(spec.oversample, 1);
  PointCloud raw;
  if (spec.kind == ShapeKind::kMeshFile) {
    raw = sample_mesh(read_obj(spec.mesh_path), raw_n, rng);
  } else {
    raw.reserve(raw_n);
    for (std::size_t i = 0; i < raw_n; ++i) {
      switch (spec.kind) {
        case ShapeKind::kSphere: raw.push_back(sample_sphere(spec.radius, rng)); break;
        case ShapeKind::kTorus: raw.push_back(sample_torus(spec.major, spec.minor, rng)); break;
        case ShapeKind::kPlaneBump: raw.push_back(sample_bump(spec, rng)); break;
        case ShapeKind::kRing2d:
          raw.push_back(sample_ring(spec.r_inner, spec.r_outer, rng));
          break;
        case ShapeKind::kLetter2d: raw.push_back(sample_letter(rng)); break;
        case ShapeKind::kMeshFile: break;  // handled above
      }
    }
  }
  if (raw.size() == n) return raw;
  return gather(raw, fps(raw, n));
}

std::vector<PatchPair> extract_patches(const PointCloud& dense_surface, std::size_t num_patches,
                                       std::size_t dense_size, std::size_t sparse_size,
                                       Rng& rng) {
  check_cloud(dense_surface);
  if (num_patches == 0) throw std::invalid_argument("extract_patches: need at least one patch");
  if (sparse_size == 0 || dense_size < sparse_size)
    throw std::invalid_argument("extract_patches: need dense_size >= sparse_size >= 1");
  if (dense_surface.size() < dense_size)
    throw std::invalid_argument("extract_patches: surface has fewer points than a dense patch");

  const auto seeds = fps(dense_surface, num_patches);
  std::optional<KdTree> tree;
  if (dense_surface.size() >= kBruteForceLimit) tree.emplace(dense_surface);

  std::vector<PatchPair> out;
  out.reserve(num_patches);
  for (const std::size_t seed : seeds) {
    const Vec3 q = dense_surface[seed];
    const auto idx =
        tree ? tree->knn(q, dense_size) : knn(dense_surface, q, dense_size);
    const PointCloud dense_raw = gather(dense_surface, idx);

    // Uniform sparse_size-subset via partial Fisher-Yates, then restored to
    // the dense patch's ordering.
    std::vector<std::size_t> pool(dense_size);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < sparse_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, dense_size - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(sparse_size);
    std::sort(pool.begin(), pool.end());

    PatchPair pair;
    auto [dense_n, norm] = normalize(dense_raw);
    pair.dense = std::move(dense_n);
    pair.norm = norm;
    pair.sparse.reserve(sparse_size);
    for (const std::size_t i : pool) pair.sparse.push_back(pair.dense[i]);
    pair.seed_index = seed;
    out.push_back(std::move(pair));
  }
  return out;
}

PointCloud add_noise(const PointCloud& cloud, double eta, Rng& rng) {
  if (eta < 0.0) throw std::invalid_argument("add_noise: eta must be nonnegative");
  if (eta == 0.0) return cloud;
  PointCloud out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = cloud[i] + normal_vec3(rng) * eta;
  return out;
}

}  // namespace pufm
