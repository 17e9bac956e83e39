#include "eidos/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "eidos/rng.hpp"

namespace eidos {

Vec3 centroid(const PointCloud& cloud) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : cloud.points) c += p;
  return c / static_cast<double>(cloud.size());
}

NeighborTable knn(const PointCloud& cloud, int k) {
  const int n = cloud.size();
  if (k < 1 || k >= n) {
    throw std::invalid_argument("knn: need 1 <= k < n, got k=" +
                                std::to_string(k) + " n=" + std::to_string(n));
  }
  NeighborTable table;
  table.k = k;
  table.rows.resize(n);
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((cloud.points[j] - cloud.points[i]).squaredNorm(), j);
    }
    // (distance, index) pairs: equal distances resolve to the lower index
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    auto& row = table.rows[i];
    row.resize(k);
    for (int m = 0; m < k; ++m) row[m] = dist[m].second;
  }
  return table;
}

PointCloud estimate_normals(const PointCloud& cloud, int k,
                            std::vector<int>* degenerate,
                            const NeighborTable* precomputed) {
  const int n = cloud.size();
  if (k < 3 || k >= n) {
    throw std::invalid_argument("estimate_normals: need 3 <= k < n");
  }
  if (precomputed && precomputed->k != k) {
    throw std::invalid_argument("estimate_normals: neighbor table has wrong k");
  }
  const NeighborTable nbrs = precomputed ? *precomputed : knn(cloud, k);
  const Vec3 center = centroid(cloud);

  PointCloud out = cloud;
  out.normals.assign(n, Vec3::UnitZ());

  for (int i = 0; i < n; ++i) {
    Vec3 mean = cloud.points[i];
    for (int j : nbrs.rows[i]) mean += cloud.points[j];
    mean /= static_cast<double>(k + 1);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Vec3 d = cloud.points[i] - mean;
    cov += d * d.transpose();
    for (int j : nbrs.rows[i]) {
      d = cloud.points[j] - mean;
      cov += d * d.transpose();
    }

    if (!(cov.trace() > 1e-24)) {
      // all neighbors coincident; covariance carries no direction
      if (degenerate) degenerate->push_back(i);
      continue;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Vec3 normal = solver.eigenvectors().col(0);  // smallest eigenvalue
    if (normal.dot(cloud.points[i] - center) < 0.0) normal = -normal;
    out.normals[i] = normal;
  }
  return out;
}

PointCloud normalize_unit_ball(const PointCloud& cloud) {
  if (cloud.size() < 1) {
    throw std::invalid_argument("normalize_unit_ball: empty cloud");
  }
  const Vec3 c = centroid(cloud);
  double max_r = 0.0;
  for (const auto& p : cloud.points) max_r = std::max(max_r, (p - c).norm());

  PointCloud out = cloud;
  if (max_r == 0.0) {
    for (auto& p : out.points) p = Vec3::Zero();
    return out;
  }
  for (auto& p : out.points) p = (p - c) / max_r;
  return out;
}

ShapeKind parse_shape(const std::string& name) {
  if (name == "sphere") return ShapeKind::Sphere;
  if (name == "cube") return ShapeKind::Cube;
  if (name == "cylinder") return ShapeKind::Cylinder;
  if (name == "torus") return ShapeKind::Torus;
  throw std::invalid_argument("unknown shape kind: " + name);
}

std::string shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cube: return "cube";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Torus: return "torus";
  }
  throw std::invalid_argument("unknown shape kind");
}

namespace {

Vec3 unit_sphere_point(RngStream& rng) {
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = 2.0 * M_PI * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Antipodal pairs (plus one great-circle triple when n is odd) so the sums
// cancel and the empirical centroid vanishes; unit radii then survive
// normalize_unit_ball. Marginally each point is still uniform on the sphere.
void sample_sphere(int n, RngStream& rng, std::vector<Vec3>& pts) {
  int remaining = n;
  if (remaining % 2 == 1) {
    const Vec3 w = unit_sphere_point(rng);
    Vec3 a = std::abs(w.x()) < 0.9 ? w.cross(Vec3::UnitX()) : w.cross(Vec3::UnitY());
    a.normalize();
    const Vec3 b = w.cross(a);
    const double theta = 2.0 * M_PI * rng.uniform();
    for (int m = 0; m < 3; ++m) {
      const double t = theta + 2.0 * M_PI * m / 3.0;
      pts.push_back(std::cos(t) * a + std::sin(t) * b);
    }
    remaining -= 3;
  }
  for (int i = 0; i < remaining / 2; ++i) {
    const Vec3 p = unit_sphere_point(rng);
    pts.push_back(p);
    pts.push_back(-p);
  }
}

void sample_cube(int n, RngStream& rng, std::vector<Vec3>& pts) {
  for (int i = 0; i < n; ++i) {
    const int face = static_cast<int>(rng.uniform_int(6));
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    const double s = (face % 2 == 0) ? 1.0 : -1.0;
    switch (face / 2) {
      case 0: pts.emplace_back(s, u, v); break;
      case 1: pts.emplace_back(u, s, v); break;
      default: pts.emplace_back(u, v, s); break;
    }
  }
}

void sample_cylinder(int n, RngStream& rng, std::vector<Vec3>& pts) {
  // radius 1, z in [-1,1]: lateral area 4*pi, each cap pi
  const double lateral_frac = 4.0 / 6.0;
  const double cap_frac = 1.0 / 6.0;
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform();
    const double phi = 2.0 * M_PI * rng.uniform();
    if (pick < lateral_frac) {
      pts.emplace_back(std::cos(phi), std::sin(phi), rng.uniform(-1.0, 1.0));
    } else {
      const double r = std::sqrt(rng.uniform());
      const double z = pick < lateral_frac + cap_frac ? 1.0 : -1.0;
      pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
  }
}

void sample_torus(int n, RngStream& rng, std::vector<Vec3>& pts) {
  const double R = 1.0, r = 0.35;
  for (int i = 0; i < n; ++i) {
    // area element ~ (R + r cos t): rejection on the tube angle
    double t;
    for (;;) {
      t = 2.0 * M_PI * rng.uniform();
      if (rng.uniform() * (R + r) <= R + r * std::cos(t)) break;
    }
    const double phi = 2.0 * M_PI * rng.uniform();
    const double w = R + r * std::cos(t);
    pts.emplace_back(w * std::cos(phi), w * std::sin(phi), r * std::sin(t));
  }
}

}  // namespace

PointCloud sample_shape_raw(ShapeKind kind, int n, std::uint64_t seed) {
  if (n < 8) throw std::invalid_argument("sample_shape: need n >= 8");
  RngStream rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  switch (kind) {
    case ShapeKind::Sphere: sample_sphere(n, rng, cloud.points); break;
    case ShapeKind::Cube: sample_cube(n, rng, cloud.points); break;
    case ShapeKind::Cylinder: sample_cylinder(n, rng, cloud.points); break;
    case ShapeKind::Torus: sample_torus(n, rng, cloud.points); break;
  }
  return cloud;
}

PointCloud sample_shape(ShapeKind kind, int n, std::uint64_t seed) {
  return normalize_unit_ball(sample_shape_raw(kind, n, seed));
}

PointCloud random_scale_augment(const PointCloud& cloud, double span,
                                std::uint64_t seed) {
  if (span < 0.0 || span >= 1.0) {
    throw std::invalid_argument("random_scale_augment: need 0 <= span < 1");
  }
  if (span == 0.0) return cloud;
  RngStream rng(seed);
  const Vec3 s(rng.uniform(1.0 - span, 1.0 + span),
               rng.uniform(1.0 - span, 1.0 + span),
               rng.uniform(1.0 - span, 1.0 + span));
  PointCloud out = cloud;
  for (auto& p : out.points) p = p.cwiseProduct(s);
  return normalize_unit_ball(out);
}

std::vector<std::pair<PointCloud, int>> build_dataset(const DatasetSpec& spec) {
  if (spec.classes.empty()) {
    throw std::invalid_argument("build_dataset: no classes");
  }
  if (spec.per_class < 1 || spec.per_class > 1000) {
    throw std::invalid_argument("build_dataset: need 1 <= per_class <= 1000");
  }
  std::vector<std::pair<PointCloud, int>> data;
  data.reserve(spec.classes.size() * spec.per_class);
  for (std::size_t label = 0; label < spec.classes.size(); ++label) {
    for (int i = 0; i < spec.per_class; ++i) {
      const std::uint64_t stream = label * 1000 + i;
      PointCloud cloud =
          sample_shape(spec.classes[label], spec.points, mix_seed(spec.seed, stream));
      if (spec.scale_aug > 0.0) {
        cloud = random_scale_augment(cloud, spec.scale_aug,
                                     mix_seed(spec.seed ^ 0x5eedull, stream));
      }
      data.emplace_back(std::move(cloud), static_cast<int>(label));
    }
  }
  return data;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_rows(const std::filesystem::path& path,
                const std::vector<Vec3>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : rows) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
        << format_double(p.z()) << '\n';
  }
}

std::vector<Vec3> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Vec3> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x() >> p.y() >> p.z())) {
      throw std::runtime_error("malformed point at " + path.string() + ":" +
                               std::to_string(lineno));
    }
    rows.push_back(p);
  }
  return rows;
}

}  // namespace

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  write_rows(path, cloud.points);
}

void save_normals(const std::filesystem::path& path, const PointCloud& cloud) {
  if (!cloud.has_normals()) {
    throw std::invalid_argument("save_normals: cloud has no normals");
  }
  write_rows(path, cloud.normals);
}

PointCloud load_cloud(const std::filesystem::path& path) {
  PointCloud cloud;
  cloud.points = read_rows(path);
  if (cloud.points.empty()) {
    throw std::runtime_error("empty point cloud: " + path.string());
  }
  return cloud;
}

void load_normals(const std::filesystem::path& path, PointCloud& cloud) {
  cloud.normals = read_rows(path);
  if (cloud.normals.size() != cloud.points.size()) {
    throw std::runtime_error("normals count mismatch: " + path.string());
  }
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "path,label\n";
  for (const auto& e : entries) out << e.path << ',' << e.label << '\n';
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "path,label") {
    throw std::runtime_error("manifest missing 'path,label' header: " +
                             path.string());
  }
  std::vector<ManifestEntry> entries;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("malformed manifest row at line " +
                               std::to_string(lineno));
    }
    ManifestEntry e;
    e.path = line.substr(0, comma);
    try {
      e.label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed manifest label at line " +
                               std::to_string(lineno));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace eidos
