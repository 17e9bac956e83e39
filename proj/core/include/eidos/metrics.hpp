#pragma once

#include <string>
#include <vector>

#include "eidos/geometry.hpp"

namespace eidos {

enum class MetricId { L2, CD, HD, Curv, Smooth };

MetricId parse_metric(const std::string& name);
std::string metric_name(MetricId id);

/// Per-point gradient rows of a distance with respect to the adversarial
/// cloud, plus a note recording which discrete choices were frozen.
struct GradientField {
  std::vector<Vec3> rows;
  std::string provenance;

  int size() const { return static_cast<int>(rows.size()); }
  Eigen::VectorXd flat() const;
  double norm() const;
};

GradientField field_from_flat(const Eigen::VectorXd& v);

// --- distance values ---------------------------------------------------------

/// Flat-vector Euclidean norm of Y - X. Requires |X| == |Y|.
double l2_distance(const PointCloud& x, const PointCloud& y);

/// (1/n) sum_j min_i ||x_i - y_j||^2, directed from adversarial to clean.
double chamfer(const PointCloud& x, const PointCloud& y);

/// max_j min_i ||x_i - y_j||^2 (directed, squared).
double hausdorff(const PointCloud& x, const PointCloud& y);

/// Local curvature statistic at point i: mean |<unit direction, normal>| over
/// the neighborhood. Coincident pairs (distance < 1e-12) contribute 0.
double curvature_kappa(int i, const PointCloud& cloud,
                       const NeighborTable& nbrs);

/// Mean squared difference between each adversarial point's curvature (with
/// normals re-estimated on Y and sign-aligned to the nearest clean normal)
/// and its nearest clean point's curvature. Requires normals on X and
/// |X|, |Y| >= k+1.
double curvature_consistency(const PointCloud& x, const PointCloud& y, int k);

/// Mean of neighborhood mean-squared distances exceeding mu + gamma*sigma
/// (population sigma). Evaluation-only; never a regularizer.
double knn_smoothness(const PointCloud& y, int k, double gamma = 1.05);

/// Dispatch on MetricId (Smooth ignores x). Used by the evaluation harness.
double metric_value(MetricId id, const PointCloud& x, const PointCloud& y,
                    int k, double smooth_gamma = 1.05);

// --- frozen surrogates and gradients -----------------------------------------

/// A metric with its discrete choices (nearest neighbors, argmax, neighbor
/// sets, normals) fixed at the freeze point, making it smooth around it.
/// value()/gradient() may be evaluated at nearby clouds of the same size;
/// the finite-difference oracle in the tests relies on exactly this.
class FrozenMetric {
 public:
  MetricId id() const { return id_; }
  double value(const PointCloud& y) const;
  GradientField gradient(const PointCloud& y) const;

 private:
  friend FrozenMetric freeze_metric(MetricId, const PointCloud&,
                                    const PointCloud&, int,
                                    const std::vector<double>*);
  MetricId id_ = MetricId::L2;
  int n_ = 0;
  int k_ = 0;
  std::vector<Vec3> x_points_;        // clean cloud
  std::vector<int> correspondence_;   // CD/Curv: i*(j); HD: {i*(j*)}
  int hd_argmax_ = -1;                // HD: j*
  std::vector<double> kappa_clean_;   // Curv: kappa(x_{i*(j)}; X)
  std::vector<std::vector<int>> y_neighbors_;  // Curv: frozen rows of knn(Y,k)
  std::vector<Vec3> y_normals_;       // Curv: frozen, sign-aligned normals
  std::string provenance_;
};

/// Captures the frozen surrogate of D_id at (X, Y). Smooth is rejected.
/// `kappa_x`, when given, supplies precomputed clean-side curvatures.
FrozenMetric freeze_metric(MetricId id, const PointCloud& x,
                           const PointCloud& y, int k,
                           const std::vector<double>* kappa_x = nullptr);

/// Gradient of the frozen surrogate of D_id with respect to Y, evaluated at
/// the freeze point. Smooth is rejected (no gradient is defined for it).
GradientField metric_gradient(MetricId id, const PointCloud& x,
                              const PointCloud& y, int k);

/// Caches the clean-side state (kNN table, per-point curvatures) so that the
/// attack loop's repeated evaluations against one clean cloud stay cheap.
/// Values and frozen gradients are bit-identical to the free functions.
class MetricEvaluator {
 public:
  MetricEvaluator(PointCloud x, std::vector<MetricId> ids, int k,
                  double smooth_gamma = 1.05);

  double value(MetricId id, const PointCloud& y) const;
  double sum(const PointCloud& y) const;  // over the configured ids
  FrozenMetric freeze(MetricId id, const PointCloud& y) const;

  const PointCloud& clean() const { return x_; }
  const std::vector<MetricId>& ids() const { return ids_; }
  int k() const { return k_; }

 private:
  PointCloud x_;
  std::vector<MetricId> ids_;
  int k_;
  double smooth_gamma_;
  std::vector<double> kappa_clean_;  // kappa(x_i; X); empty until needed
};

}  // namespace eidos
