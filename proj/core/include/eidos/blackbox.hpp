#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "eidos/attack.hpp"
#include "eidos/classifier.hpp"
#include "eidos/geometry.hpp"
#include "eidos/metrics.hpp"

namespace eidos {

/// Per-point rotation records of the reversible normal-aligned transform:
/// row 0 and 1 of rot[i] span the tangent plane at point i, row 2 is the
/// normal. Transformed coordinates are rot[i] * y_i.
struct RsiFrames {
  std::vector<Eigen::Matrix3d> rot;
};

struct RsiResult {
  PointCloud transformed;
  RsiFrames frames;
};

/// Expresses each point in an orthonormal frame whose third axis is its
/// normal. The first tangent axis is the normalized projection of the global
/// x-axis onto the tangent plane (y-axis fallback when near-parallel).
RsiResult rsi_transform(const PointCloud& cloud);
PointCloud rsi_inverse(const PointCloud& transformed, const RsiFrames& frames);

/// Rotates a gradient field into the per-point transformed frames.
GradientField to_frames(const GradientField& g, const RsiFrames& frames);

struct SensitivityEntry {
  int index = 0;
  double score = 0.0;  // tangent-plane magnitude of the surrogate gradient
};

/// Entries sorted by score descending, ties by lowest point index.
std::vector<SensitivityEntry> sensitivity_map(const GradientField& g);

struct BlackboxConfig {
  double eps1 = 0.32;  // misclassification probe step
  double eps2 = 0.16;  // refinement step
  std::vector<MetricId> regularizers;
  long query_budget = 1000000;
  int k = 16;
  double smooth_gamma = 1.05;
};

/// Label-only target abstraction; adapters exist for plain and
/// defense-wrapped classifiers (make_model / defended_model expose .label).
using LabelOracle = std::function<int(const PointCloud&)>;

struct ProbeEvent {
  int point = 0;
  Vec3 delta;  // displacement applied in the global frame
};

struct BlackboxResult {
  AttackResult result;
  long queries = 0;         // total target-oracle invocations
  long probe_queries = 0;   // during sensitivity-ranked probing
  long refine_queries = 0;  // adversarial checks inside refinement
  long points_probed = 0;
  std::vector<ProbeEvent> probe_log;  // pre-refinement probes only
};

/// Query-based attack: ranks points by the surrogate's tangent-plane
/// gradient magnitude, probes each by +-eps1 in its tangent plane, and after
/// the first target misclassification refines with Gram-Schmidt steps of
/// eps2, keeping the adversarial candidate with the smallest regularizer sum.
/// The surrogate gradient is computed once, up front. Requires target(X) == t.
BlackboxResult blackbox_attack(const ClassifierParams& surrogate,
                               const LabelOracle& target, const PointCloud& x,
                               int t, const BlackboxConfig& cfg);

}  // namespace eidos
