#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eidos {

using Vec3 = Eigen::Vector3d;

/// An unordered set of 3D points stored in row order. The order is pure
/// bookkeeping; no operation may depend on it except for tie-breaking rules,
/// which always pick the lowest index.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or exactly one unit vector per point

  int size() const { return static_cast<int>(points.size()); }
  bool has_normals() const { return !normals.empty(); }
};

/// k nearest neighbors per point (self excluded), ties broken by lower index.
struct NeighborTable {
  int k = 0;
  std::vector<std::vector<int>> rows;  // rows[i] has exactly k indices
};

Vec3 centroid(const PointCloud& cloud);

/// Exhaustive kNN. Requires 1 <= k < n; throws std::invalid_argument otherwise.
NeighborTable knn(const PointCloud& cloud, int k);

/// PCA normals: smallest-eigenvalue eigenvector of the covariance of the
/// k-neighborhood plus the point itself, oriented away from the cloud
/// centroid. Degenerate (all-coincident) neighborhoods get (0,0,1) and the
/// point index is appended to `degenerate` when given. Requires 3 <= k < n.
/// `nbrs`, when given, must be knn(cloud, k) and skips recomputing it.
PointCloud estimate_normals(const PointCloud& cloud, int k,
                            std::vector<int>* degenerate = nullptr,
                            const NeighborTable* nbrs = nullptr);

/// (cloud - centroid) / max radius. A single repeated point maps to all-zero.
PointCloud normalize_unit_ball(const PointCloud& cloud);

enum class ShapeKind { Sphere, Cube, Cylinder, Torus };

ShapeKind parse_shape(const std::string& name);
std::string shape_name(ShapeKind kind);

/// Uniform-area surface samples in the shape's own frame (sphere radius 1,
/// cube [-1,1]^3, cylinder r=1 h=2, torus R=1 r=0.35). Deterministic per seed.
PointCloud sample_shape_raw(ShapeKind kind, int n, std::uint64_t seed);

/// sample_shape_raw followed by normalize_unit_ball. Requires n >= 8.
PointCloud sample_shape(ShapeKind kind, int n, std::uint64_t seed);

/// Per-axis random scale drawn from [1-span, 1+span], then unit-ball
/// renormalization. Used by the dataset generator to give the synthetic
/// classes intra-class shape variation. Requires 0 <= span < 1.
PointCloud random_scale_augment(const PointCloud& cloud, double span,
                                std::uint64_t seed);

// --- text formats -----------------------------------------------------------
// Point clouds: one point per line, three decimal floats separated by single
// spaces, "\n" endings, no header. Normals use the same layout in a companion
// file. Dataset manifest: CSV with header "path,label", 0-based labels.

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);
void save_normals(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_cloud(const std::filesystem::path& path);
void load_normals(const std::filesystem::path& path, PointCloud& cloud);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  int label = 0;
};

/// Recipe for the synthetic labeled suite. Every cloud's sampling and
/// augmentation seeds derive from `seed`, the class index, and the in-class
/// index, so the same spec always yields bit-identical clouds whether the
/// dataset is built in memory or written to disk. per_class <= 1000.
struct DatasetSpec {
  std::vector<ShapeKind> classes;
  int per_class = 100;
  int points = 256;
  double scale_aug = 0.0;
  std::uint64_t seed = 1;
};

std::vector<std::pair<PointCloud, int>> build_dataset(const DatasetSpec& spec);

void save_manifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace eidos
