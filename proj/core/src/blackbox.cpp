#include "eidos/blackbox.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eidos {

RsiResult rsi_transform(const PointCloud& cloud) {
  if (!cloud.has_normals()) {
    throw std::invalid_argument("rsi_transform: cloud needs normals");
  }
  RsiResult out;
  out.transformed.points.resize(cloud.size());
  out.frames.rot.resize(cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec3& n = cloud.normals[i];
    Vec3 a = Vec3::UnitX() - n.x() * n;
    if (a.norm() < 1e-6) a = Vec3::UnitY() - n.y() * n;
    a.normalize();
    const Vec3 b = n.cross(a);
    Eigen::Matrix3d rot;
    rot.row(0) = a;
    rot.row(1) = b;
    rot.row(2) = n;
    out.frames.rot[i] = rot;
    out.transformed.points[i] = rot * cloud.points[i];
  }
  return out;
}

PointCloud rsi_inverse(const PointCloud& transformed,
                       const RsiFrames& frames) {
  if (static_cast<std::size_t>(transformed.size()) != frames.rot.size()) {
    throw std::invalid_argument("rsi_inverse: frame count mismatch");
  }
  PointCloud out;
  out.points.resize(transformed.size());
  for (int i = 0; i < transformed.size(); ++i) {
    out.points[i] = frames.rot[i].transpose() * transformed.points[i];
  }
  return out;
}

GradientField to_frames(const GradientField& g, const RsiFrames& frames) {
  if (static_cast<std::size_t>(g.size()) != frames.rot.size()) {
    throw std::invalid_argument("to_frames: frame count mismatch");
  }
  GradientField out = g;
  for (int i = 0; i < g.size(); ++i) out.rows[i] = frames.rot[i] * g.rows[i];
  return out;
}

std::vector<SensitivityEntry> sensitivity_map(const GradientField& g) {
  std::vector<SensitivityEntry> entries(g.size());
  for (int i = 0; i < g.size(); ++i) {
    entries[i].index = i;
    entries[i].score = std::hypot(g.rows[i].x(), g.rows[i].y());
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const SensitivityEntry& a, const SensitivityEntry& b) {
                     return a.score > b.score;
                   });
  return entries;
}

BlackboxResult blackbox_attack(const ClassifierParams& surrogate,
                               const LabelOracle& target, const PointCloud& x,
                               int t, const BlackboxConfig& cfg) {
  if (!(cfg.eps1 > 0.0) || !(cfg.eps2 > 0.0)) {
    throw std::invalid_argument("blackbox: eps1, eps2 > 0");
  }
  for (MetricId id : cfg.regularizers) {
    if (id == MetricId::Smooth) {
      throw std::invalid_argument(
          "blackbox: smooth is evaluation-only and cannot be a regularizer");
    }
  }
  const auto start_time = std::chrono::steady_clock::now();

  const PointCloud clean =
      x.has_normals() ? x : estimate_normals(x, cfg.k);
  const RsiResult rsi = rsi_transform(clean);
  const RsiFrames& frames = rsi.frames;

  // surrogate gradient, computed once in the transformed frame
  const GradientField g = to_frames(input_gradient(surrogate, clean, t), frames);
  const double gnorm = g.norm();
  const Eigen::VectorXd ghat =
      gnorm < 1e-12 ? Eigen::VectorXd::Zero(3 * clean.size()).eval()
                    : Eigen::VectorXd(g.flat() / gnorm);

  MetricEvaluator eval(clean, cfg.regularizers, cfg.k, cfg.smooth_gamma);
  BlackboxResult bb;
  AttackResult& res = bb.result;
  double best_obj = std::numeric_limits<double>::infinity();

  const auto consider = [&](const PointCloud& y_global) {
    const double obj = eval.sum(y_global);
    if (obj < best_obj) {
      best_obj = obj;
      res.best = y_global;
      res.success = true;
      res.best_objective_history.push_back(obj);
    }
  };

  PointCloud y = rsi.transformed;
  int current_label = t;  // target(X) == t is the caller's precondition
  bool out_of_budget = false;

  const auto query = [&](const PointCloud& y_global) {
    ++bb.queries;
    return target(y_global);
  };

  const auto refine = [&]() {
    const PointCloud y_global = rsi_inverse(y, frames);
    std::vector<Eigen::VectorXd> inputs;
    inputs.push_back(ghat);
    for (MetricId id : cfg.regularizers) {
      const GradientField d =
          to_frames(eval.freeze(id, y_global).gradient(y_global), frames);
      const Eigen::VectorXd df = d.flat();
      const double dn = df.norm();
      if (dn >= 1e-12) inputs.push_back(df / dn);
    }
    for (const auto& v : gram_schmidt(inputs)) {
      if (bb.queries >= cfg.query_budget) {
        out_of_budget = true;
        return;
      }
      for (int i = 0; i < y.size(); ++i) y.points[i] -= cfg.eps2 * v.segment<3>(3 * i);
      const PointCloud cand = rsi_inverse(y, frames);
      current_label = query(cand);
      ++bb.refine_queries;
      if (current_label != t) consider(cand);
    }
  };

  for (const SensitivityEntry& entry : sensitivity_map(g)) {
    if (current_label != t || out_of_budget) break;
    const int i = entry.index;
    const double theta = std::atan2(g.rows[i].y(), g.rows[i].x());
    const Vec3 q_local(std::cos(theta), std::sin(theta), 0.0);
    ++bb.points_probed;

    for (const double eta : {-cfg.eps1, cfg.eps1}) {
      if (bb.queries >= cfg.query_budget) {
        out_of_budget = true;
        break;
      }
      PointCloud cand = y;
      cand.points[i] -= eta * q_local;
      bb.probe_log.push_back(
          {i, frames.rot[i].transpose() * (-eta * q_local)});
      const PointCloud cand_global = rsi_inverse(cand, frames);
      const int label = query(cand_global);
      ++bb.probe_queries;
      if (label != t) {
        y = cand;
        current_label = label;
        consider(cand_global);
        refine();
        break;
      }
      // failed probe: y stays untouched
    }
  }

  if (res.success) {
    res.l2 = l2_distance(clean, res.best);
    res.cd = chamfer(clean, res.best);
    res.hd = hausdorff(clean, res.best);
    res.curv = eval.value(MetricId::Curv, res.best);
    res.smooth = knn_smoothness(res.best, cfg.k, cfg.smooth_gamma);
  }
  res.iterations = static_cast<int>(bb.points_probed);
  res.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_time)
                         .count();
  return bb;
}

}  // namespace eidos
