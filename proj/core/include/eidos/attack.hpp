#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eidos/classifier.hpp"
#include "eidos/geometry.hpp"
#include "eidos/metrics.hpp"

namespace eidos {

enum class Phase { In, Out };
enum class StepSchedule { Fixed, Adaptive };

struct AttackConfig {
  std::vector<MetricId> regularizers;       // the attack's D set
  double step = 0.06;                       // epsilon
  StepSchedule schedule = StepSchedule::Fixed;
  double decay = 0.05;                      // adaptive decay, in (0,1)
  int max_iters = 100;                      // K
  int k = 16;                               // neighborhood size for Curv
  double smooth_gamma = 1.05;               // for the reported Smooth value
  std::uint64_t seed = 0;
};

struct TraceRow {
  int iter = 0;
  Phase phase = Phase::In;
  double loss = 0.0;       // margin loss at the iterate
  double reg_sum = 0.0;    // sum of the configured regularizer values
  std::vector<double> cosines;  // (g,d_j) for all j, then (d_j,d_k) pairs
  double max_abs_dot_vg = 0.0;  // max |<v_j, g_hat>| over applied directions
};

struct AttackResult {
  PointCloud best;          // Y*; empty when success is false
  bool success = false;
  double l2 = 0.0, cd = 0.0, hd = 0.0, curv = 0.0, smooth = 0.0;
  int iterations = 0;
  bool stalled = false;     // loss gradient vanished while still classified
  double wall_seconds = 0.0;
  std::vector<TraceRow> trace;
  std::vector<double> best_objective_history;  // recorded at each Y* update
};

/// f_t - max_{k != t} f_k; negative exactly when misclassified.
double margin_loss(const Eigen::VectorXd& logits, int t);

/// Orthonormalizes in input order; vectors whose residual norm after
/// projection falls below 1e-8 are dropped. The first input must be the
/// normalized loss gradient; its renormalized image is excluded from the
/// output, so every returned vector is orthogonal to it and to the others.
std::vector<Eigen::VectorXd> gram_schmidt(
    const std::vector<Eigen::VectorXd>& vectors);

double step_size(int iter, const AttackConfig& cfg);

/// Flat-vector cosines: (g, d_j) for every j, then (d_j, d_k) for j < k.
/// Returns 0 whenever either norm is below 1e-12.
std::vector<double> cosine_diagnostics(const GradientField& g,
                                       const std::vector<GradientField>& ds);

/// Gradient/label surface the attacks run against, so a defense-wrapped
/// classifier can slot in without touching the attack loop.
struct AttackModel {
  std::function<GradientField(const PointCloud&, int)> loss_gradient;
  std::function<int(const PointCloud&)> label;
  std::function<double(const PointCloud&, int)> loss;  // margin loss value
};

AttackModel make_model(const ClassifierParams& params);

/// Single-regularizer two-phase attack. IN: step along the normalized loss
/// gradient while still correctly classified. OUT: step along the metric's
/// descent direction projected orthogonal to the loss gradient. Y* is the
/// adversarial iterate with the smallest D; requires label(X) == t.
AttackResult eidos_base(const AttackModel& model, const PointCloud& x, int t,
                        MetricId metric, const AttackConfig& cfg);
AttackResult eidos_base(const ClassifierParams& params, const PointCloud& x,
                        int t, MetricId metric, const AttackConfig& cfg);

/// Multi-regularizer attack: OUT phase Gram-Schmidt-orthogonalizes the
/// regularizer directions against the loss gradient and applies each in
/// sequence, keeping the adversarial iterate with the smallest sum of
/// regularizer values.
AttackResult eidos_attack(const AttackModel& model, const PointCloud& x, int t,
                   const AttackConfig& cfg);
AttackResult eidos_attack(const ClassifierParams& params, const PointCloud& x, int t,
                   const AttackConfig& cfg);

/// Attack trace line format: iteration, phase, loss, sum of regularizers,
/// then the cosine diagnostics, tab-separated.
std::string format_trace(const std::vector<TraceRow>& trace);

}  // namespace eidos
