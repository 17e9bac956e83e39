#include "eidos/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace eidos {

double margin_loss(const Eigen::VectorXd& logits, int t) {
  if (logits.size() < 2) {
    throw std::invalid_argument("margin_loss: need at least two classes");
  }
  if (t < 0 || t >= logits.size()) {
    throw std::invalid_argument("margin_loss: label out of range");
  }
  double runner = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < logits.size(); ++k) {
    if (k != t) runner = std::max(runner, logits[k]);
  }
  return logits[t] - runner;
}

std::vector<Eigen::VectorXd> gram_schmidt(
    const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) {
    throw std::invalid_argument("gram_schmidt: empty input");
  }
  const Eigen::Index dim = vectors.front().size();
  if (dim == 0) {
    throw std::invalid_argument("gram_schmidt: zero-length vectors");
  }
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw std::invalid_argument("gram_schmidt: mismatched lengths");
    }
  }

  std::vector<Eigen::VectorXd> basis;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Eigen::VectorXd w = vectors[i];
    for (const auto& u : basis) w -= u.dot(w) * u;
    const double norm = w.norm();
    if (norm < 1e-8) continue;  // degenerate residual: dropped
    basis.push_back(w / norm);
    source.push_back(i);
  }

  // the renormalized loss gradient (input 0) is excluded from the output
  std::vector<Eigen::VectorXd> out;
  for (std::size_t m = 0; m < basis.size(); ++m) {
    if (source[m] != 0) out.push_back(std::move(basis[m]));
  }
  return out;
}

double step_size(int iter, const AttackConfig& cfg) {
  if (cfg.schedule == StepSchedule::Fixed) return cfg.step;
  return cfg.step * std::pow(1.0 - cfg.decay, iter);
}

std::vector<double> cosine_diagnostics(const GradientField& g,
                                       const std::vector<GradientField>& ds) {
  const auto cosine = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return a.dot(b) / (na * nb);
  };
  const Eigen::VectorXd gf = g.flat();
  std::vector<Eigen::VectorXd> dfs;
  dfs.reserve(ds.size());
  for (const auto& d : ds) {
    if (d.size() != g.size()) {
      throw std::invalid_argument("cosine_diagnostics: field size mismatch");
    }
    dfs.push_back(d.flat());
  }
  std::vector<double> out;
  for (const auto& df : dfs) out.push_back(cosine(gf, df));
  for (std::size_t j = 0; j < dfs.size(); ++j) {
    for (std::size_t k = j + 1; k < dfs.size(); ++k) {
      out.push_back(cosine(dfs[j], dfs[k]));
    }
  }
  return out;
}

AttackModel make_model(const ClassifierParams& params) {
  auto p = std::make_shared<const ClassifierParams>(params);
  AttackModel m;
  m.loss_gradient = [p](const PointCloud& cloud, int t) {
    return input_gradient(*p, cloud, t);
  };
  m.label = [p](const PointCloud& cloud) { return predict(*p, cloud); };
  m.loss = [p](const PointCloud& cloud, int t) {
    return margin_loss(forward(*p, cloud), t);
  };
  return m;
}

namespace {

constexpr double kGradEps = 1e-12;

void validate_config(const AttackConfig& cfg, bool need_regs) {
  if (!(cfg.step > 0.0)) throw std::invalid_argument("attack: step > 0");
  if (cfg.max_iters < 1) throw std::invalid_argument("attack: max_iters >= 1");
  if (cfg.schedule == StepSchedule::Adaptive &&
      !(cfg.decay > 0.0 && cfg.decay < 1.0)) {
    throw std::invalid_argument("attack: adaptive decay must be in (0,1)");
  }
  if (need_regs && cfg.regularizers.empty()) {
    throw std::invalid_argument("attack: regularizer set must be nonempty");
  }
  for (MetricId id : cfg.regularizers) {
    if (id == MetricId::Smooth) {
      throw std::invalid_argument(
          "attack: smooth is evaluation-only and cannot be a regularizer");
    }
  }
}

void apply_step(PointCloud& y, const Eigen::VectorXd& direction, double eps) {
  for (int i = 0; i < y.size(); ++i) {
    y.points[i] -= eps * direction.segment<3>(3 * i);
  }
}

/// Shared two-phase loop. `objective_ids` drive the best-so-far comparison;
/// `direction_ids` drive the OUT-phase descent directions. For the base
/// attack both hold the single metric and `project_only` selects the plain
/// tangent projection instead of Gram-Schmidt.
AttackResult run_attack(const AttackModel& model, const PointCloud& x_in,
                        int t, const AttackConfig& cfg,
                        const std::vector<MetricId>& direction_ids,
                        bool project_only) {
  const auto start_time = std::chrono::steady_clock::now();

  PointCloud x = x_in.has_normals() ? x_in : estimate_normals(x_in, cfg.k);
  if (model.label(x) != t) {
    throw std::invalid_argument(
        "attack: sample is not classified as the attacked label");
  }

  MetricEvaluator eval(x, direction_ids, cfg.k, cfg.smooth_gamma);
  AttackResult res;
  double best_obj = std::numeric_limits<double>::infinity();

  const auto consider = [&](const PointCloud& y) {
    if (model.label(y) == t) return;
    const double obj = eval.sum(y);
    if (obj < best_obj) {
      best_obj = obj;
      res.best = y;
      res.success = true;
      res.best_objective_history.push_back(obj);
    }
  };

  PointCloud y = x;
  for (int i = 0; i < cfg.max_iters; ++i) {
    res.iterations = i + 1;
    const double eps = step_size(i, cfg);
    const GradientField g = model.loss_gradient(y, t);
    const double gnorm = g.norm();

    TraceRow row;
    row.iter = i;
    row.loss = model.loss(y, t);
    row.reg_sum = eval.sum(y);

    if (model.label(y) == t) {
      row.phase = Phase::In;
      if (gnorm < kGradEps) {
        res.trace.push_back(row);
        res.stalled = true;
        res.success = false;
        res.best = PointCloud{};
        break;
      }
      apply_step(y, g.flat() / gnorm, eps);
      consider(y);
    } else {
      row.phase = Phase::Out;
      std::vector<GradientField> dfields;
      dfields.reserve(direction_ids.size());
      for (MetricId id : direction_ids) {
        dfields.push_back(eval.freeze(id, y).gradient(y));
      }
      row.cosines = cosine_diagnostics(g, dfields);

      const Eigen::VectorXd ghat =
          gnorm < kGradEps ? Eigen::VectorXd::Zero(3 * y.size()).eval()
                           : Eigen::VectorXd(g.flat() / gnorm);

      if (project_only) {
        const Eigen::VectorXd d = dfields.front().flat();
        const double dnorm = d.norm();
        if (dnorm >= kGradEps) {
          const Eigen::VectorXd dhat = d / dnorm;
          const Eigen::VectorXd v = dhat - dhat.dot(ghat) * ghat;
          row.max_abs_dot_vg = std::abs(v.dot(ghat));
          apply_step(y, v, eps);
          consider(y);
        }
      } else {
        std::vector<Eigen::VectorXd> inputs;
        inputs.push_back(ghat);
        for (const auto& d : dfields) {
          const Eigen::VectorXd df = d.flat();
          const double dn = df.norm();
          if (dn >= kGradEps) inputs.push_back(df / dn);
        }
        const std::vector<Eigen::VectorXd> dirs = gram_schmidt(inputs);
        for (const auto& v : dirs) {
          row.max_abs_dot_vg =
              std::max(row.max_abs_dot_vg, std::abs(v.dot(ghat)));
          apply_step(y, v, eps);
          consider(y);
        }
      }
    }
    res.trace.push_back(row);
  }

  if (res.success) {
    res.l2 = l2_distance(x, res.best);
    res.cd = chamfer(x, res.best);
    res.hd = hausdorff(x, res.best);
    res.curv = eval.value(MetricId::Curv, res.best);
    res.smooth = knn_smoothness(res.best, cfg.k, cfg.smooth_gamma);
  }
  res.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_time)
                         .count();
  return res;
}

}  // namespace

AttackResult eidos_base(const AttackModel& model, const PointCloud& x, int t,
                        MetricId metric, const AttackConfig& cfg) {
  if (metric == MetricId::Smooth) {
    throw std::invalid_argument(
        "attack: smooth is evaluation-only and cannot be a regularizer");
  }
  validate_config(cfg, /*need_regs=*/false);
  return run_attack(model, x, t, cfg, {metric}, /*project_only=*/true);
}

AttackResult eidos_base(const ClassifierParams& params, const PointCloud& x,
                        int t, MetricId metric, const AttackConfig& cfg) {
  return eidos_base(make_model(params), x, t, metric, cfg);
}

AttackResult eidos_attack(const AttackModel& model, const PointCloud& x, int t,
                   const AttackConfig& cfg) {
  validate_config(cfg, /*need_regs=*/true);
  return run_attack(model, x, t, cfg, cfg.regularizers, /*project_only=*/false);
}

AttackResult eidos_attack(const ClassifierParams& params, const PointCloud& x, int t,
                   const AttackConfig& cfg) {
  return eidos_attack(make_model(params), x, t, cfg);
}

std::string format_trace(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  for (const auto& row : trace) {
    out << row.iter << '\t' << (row.phase == Phase::In ? "IN" : "OUT") << '\t'
        << format_double(row.loss) << '\t' << format_double(row.reg_sum);
    for (double c : row.cosines) out << '\t' << format_double(c);
    out << '\n';
  }
  return out.str();
}

}  // namespace eidos
