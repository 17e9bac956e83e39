#include "eidos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eidos {

MetricId parse_metric(const std::string& name) {
  if (name == "l2") return MetricId::L2;
  if (name == "cd") return MetricId::CD;
  if (name == "hd") return MetricId::HD;
  if (name == "curv") return MetricId::Curv;
  if (name == "smooth") return MetricId::Smooth;
  throw std::invalid_argument("unknown metric: " + name);
}

std::string metric_name(MetricId id) {
  switch (id) {
    case MetricId::L2: return "l2";
    case MetricId::CD: return "cd";
    case MetricId::HD: return "hd";
    case MetricId::Curv: return "curv";
    case MetricId::Smooth: return "smooth";
  }
  throw std::invalid_argument("unknown metric id");
}

Eigen::VectorXd GradientField::flat() const {
  Eigen::VectorXd v(3 * rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v.segment<3>(3 * i) = rows[i];
  return v;
}

double GradientField::norm() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.squaredNorm();
  return std::sqrt(s);
}

GradientField field_from_flat(const Eigen::VectorXd& v) {
  GradientField g;
  g.rows.resize(v.size() / 3);
  for (std::size_t i = 0; i < g.rows.size(); ++i) g.rows[i] = v.segment<3>(3 * i);
  return g;
}

namespace {

constexpr double kCoincident = 1e-12;

/// Nearest clean index for each adversarial point, ties to the lower index.
std::vector<int> nearest_clean(const PointCloud& x, const PointCloud& y) {
  std::vector<int> corr(y.size());
  for (int j = 0; j < y.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < x.size(); ++i) {
      const double d = (x.points[i] - y.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        arg = i;
      }
    }
    corr[j] = arg;
  }
  return corr;
}

void require_nonempty(const PointCloud& x, const PointCloud& y,
                      const char* op) {
  if (x.size() < 1 || y.size() < 1) {
    throw std::invalid_argument(std::string(op) + ": empty cloud");
  }
}

}  // namespace

double l2_distance(const PointCloud& x, const PointCloud& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("l2_distance: size mismatch");
  }
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    s += (y.points[i] - x.points[i]).squaredNorm();
  }
  return std::sqrt(s);
}

double chamfer(const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, y, "chamfer");
  double s = 0.0;
  for (int j = 0; j < y.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.size(); ++i) {
      best = std::min(best, (x.points[i] - y.points[j]).squaredNorm());
    }
    s += best;
  }
  return s / y.size();
}

double hausdorff(const PointCloud& x, const PointCloud& y) {
  require_nonempty(x, y, "hausdorff");
  double worst = 0.0;
  for (int j = 0; j < y.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.size(); ++i) {
      best = std::min(best, (x.points[i] - y.points[j]).squaredNorm());
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double curvature_kappa(int i, const PointCloud& cloud,
                       const NeighborTable& nbrs) {
  const Vec3& n = cloud.normals.at(i);
  double s = 0.0;
  for (int j : nbrs.rows.at(i)) {
    const Vec3 w = cloud.points[j] - cloud.points[i];
    const double r = w.norm();
    if (r < kCoincident) continue;
    s += std::abs(w.dot(n) / r);
  }
  return s / nbrs.k;
}

namespace {

/// Shared state of the curvature-consistency pipeline: correspondences,
/// clean-side curvatures, and the adversarial side's neighbor rows and
/// sign-aligned re-estimated normals. freeze_metric(Curv) copies it verbatim,
/// so the attack's frozen gradients and the reported distances agree.
struct CurvState {
  std::vector<int> corr;
  std::vector<double> kappa_clean;
  std::vector<std::vector<int>> y_nbrs;
  std::vector<Vec3> y_normals;
  int k = 0;
};

std::vector<double> clean_curvatures(const PointCloud& x, int k) {
  if (!x.has_normals()) {
    throw std::invalid_argument("curvature: clean cloud needs normals");
  }
  const NeighborTable x_nbrs = knn(x, k);
  std::vector<double> kx(x.size());
  for (int i = 0; i < x.size(); ++i) kx[i] = curvature_kappa(i, x, x_nbrs);
  return kx;
}

CurvState build_curv_state(const PointCloud& x, const PointCloud& y, int k,
                           const std::vector<double>* kappa_x = nullptr) {
  if (!x.has_normals()) {
    throw std::invalid_argument("curvature: clean cloud needs normals");
  }
  if (x.size() < k + 1 || y.size() < k + 1) {
    throw std::invalid_argument("curvature: clouds need at least k+1 points");
  }
  CurvState st;
  st.k = k;
  st.corr = nearest_clean(x, y);

  const std::vector<double> local =
      kappa_x ? std::vector<double>() : clean_curvatures(x, k);
  const std::vector<double>& kx = kappa_x ? *kappa_x : local;
  st.kappa_clean.resize(y.size());
  for (int j = 0; j < y.size(); ++j) st.kappa_clean[j] = kx[st.corr[j]];

  const NeighborTable y_nbrs = knn(y, k);
  st.y_nbrs = y_nbrs.rows;
  PointCloud y_est = estimate_normals(y, k, nullptr, &y_nbrs);
  st.y_normals.resize(y.size());
  for (int j = 0; j < y.size(); ++j) {
    Vec3 n = y_est.normals[j];
    if (n.dot(x.normals[st.corr[j]]) < 0.0) n = -n;
    st.y_normals[j] = n;
  }
  return st;
}

double curv_value(const CurvState& st, const PointCloud& y) {
  double s = 0.0;
  for (int j = 0; j < y.size(); ++j) {
    double kap = 0.0;
    for (int l : st.y_nbrs[j]) {
      const Vec3 w = y.points[l] - y.points[j];
      const double r = w.norm();
      if (r < kCoincident) continue;
      kap += std::abs(w.dot(st.y_normals[j]) / r);
    }
    kap /= st.k;
    const double diff = kap - st.kappa_clean[j];
    s += diff * diff;
  }
  return s / y.size();
}

}  // namespace

double curvature_consistency(const PointCloud& x, const PointCloud& y, int k) {
  const CurvState st = build_curv_state(x, y, k);
  return curv_value(st, y);
}

double knn_smoothness(const PointCloud& y, int k, double gamma) {
  const int n = y.size();
  if (k >= n) throw std::invalid_argument("knn_smoothness: need k < n");
  const NeighborTable nbrs = knn(y, k);
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j : nbrs.rows[i]) s += (y.points[i] - y.points[j]).squaredNorm();
    d[i] = s / k;
  }
  double mu = 0.0;
  for (double v : d) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : d) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / n);  // population form

  double s = 0.0;
  for (double v : d) {
    if (v > mu + gamma * sigma) s += v;
  }
  return s / n;
}

double metric_value(MetricId id, const PointCloud& x, const PointCloud& y,
                    int k, double smooth_gamma) {
  switch (id) {
    case MetricId::L2: return l2_distance(x, y);
    case MetricId::CD: return chamfer(x, y);
    case MetricId::HD: return hausdorff(x, y);
    case MetricId::Curv: return curvature_consistency(x, y, k);
    case MetricId::Smooth: return knn_smoothness(y, k, smooth_gamma);
  }
  throw std::invalid_argument("unknown metric id");
}

FrozenMetric freeze_metric(MetricId id, const PointCloud& x,
                           const PointCloud& y, int k,
                           const std::vector<double>* kappa_x) {
  FrozenMetric m;
  m.id_ = id;
  m.n_ = y.size();
  m.k_ = k;
  m.x_points_ = x.points;
  switch (id) {
    case MetricId::L2:
      if (x.size() != y.size()) {
        throw std::invalid_argument("freeze_metric(l2): size mismatch");
      }
      m.provenance_ = "l2: exact, no frozen choices";
      break;
    case MetricId::CD:
      require_nonempty(x, y, "freeze_metric(cd)");
      m.correspondence_ = nearest_clean(x, y);
      m.provenance_ = "cd: nearest-clean correspondences frozen";
      break;
    case MetricId::HD: {
      require_nonempty(x, y, "freeze_metric(hd)");
      m.correspondence_ = nearest_clean(x, y);
      double worst = -1.0;
      for (int j = 0; j < y.size(); ++j) {
        const double d =
            (x.points[m.correspondence_[j]] - y.points[j]).squaredNorm();
        if (d > worst) {  // strict: ties keep the lowest adversarial index
          worst = d;
          m.hd_argmax_ = j;
        }
      }
      m.provenance_ = "hd: argmax point and correspondence frozen";
      break;
    }
    case MetricId::Curv: {
      const CurvState st = build_curv_state(x, y, k, kappa_x);
      m.correspondence_ = st.corr;
      m.kappa_clean_ = st.kappa_clean;
      m.y_neighbors_ = st.y_nbrs;
      m.y_normals_ = st.y_normals;
      m.provenance_ =
          "curv: correspondences, neighbor sets, and re-estimated "
          "sign-aligned normals frozen";
      break;
    }
    case MetricId::Smooth:
      throw std::invalid_argument(
          "smooth is evaluation-only and has no gradient surrogate");
  }
  return m;
}

double FrozenMetric::value(const PointCloud& y) const {
  if (y.size() != n_) {
    throw std::invalid_argument("FrozenMetric::value: size mismatch");
  }
  switch (id_) {
    case MetricId::L2: {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) s += (y.points[i] - x_points_[i]).squaredNorm();
      return std::sqrt(s);
    }
    case MetricId::CD: {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) {
        s += (y.points[j] - x_points_[correspondence_[j]]).squaredNorm();
      }
      return s / n_;
    }
    case MetricId::HD:
      return (y.points[hd_argmax_] - x_points_[correspondence_[hd_argmax_]])
          .squaredNorm();
    case MetricId::Curv: {
      CurvState st;
      st.k = k_;
      st.corr = correspondence_;
      st.kappa_clean = kappa_clean_;
      st.y_nbrs = y_neighbors_;
      st.y_normals = y_normals_;
      return curv_value(st, y);
    }
    default: break;
  }
  throw std::logic_error("FrozenMetric::value: bad id");
}

GradientField FrozenMetric::gradient(const PointCloud& y) const {
  if (y.size() != n_) {
    throw std::invalid_argument("FrozenMetric::gradient: size mismatch");
  }
  GradientField g;
  g.provenance = provenance_;
  g.rows.assign(n_, Vec3::Zero());
  switch (id_) {
    case MetricId::L2: {
      const double d = value(y);
      if (d > 0.0) {
        for (int i = 0; i < n_; ++i) g.rows[i] = (y.points[i] - x_points_[i]) / d;
      }
      return g;
    }
    case MetricId::CD: {
      for (int j = 0; j < n_; ++j) {
        g.rows[j] = (2.0 / n_) * (y.points[j] - x_points_[correspondence_[j]]);
      }
      return g;
    }
    case MetricId::HD: {
      g.rows[hd_argmax_] =
          2.0 * (y.points[hd_argmax_] - x_points_[correspondence_[hd_argmax_]]);
      return g;
    }
    case MetricId::Curv: {
      // d/dw |<w,n>/||w||| = sign(s) (n - u s) / r with u = w/r, s = <u,n>;
      // applied + to the neighbor and - to the center point.
      for (int j = 0; j < n_; ++j) {
        double kap = 0.0;
        for (int l : y_neighbors_[j]) {
          const Vec3 w = y.points[l] - y.points[j];
          const double r = w.norm();
          if (r < kCoincident) continue;
          kap += std::abs(w.dot(y_normals_[j]) / r);
        }
        kap /= k_;
        const double outer = (2.0 / n_) * (kap - kappa_clean_[j]) / k_;
        for (int l : y_neighbors_[j]) {
          const Vec3 w = y.points[l] - y.points[j];
          const double r = w.norm();
          if (r < kCoincident) continue;
          const Vec3 u = w / r;
          const double s = u.dot(y_normals_[j]);
          const double sgn = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
          const Vec3 dw = outer * sgn * (y_normals_[j] - u * s) / r;
          g.rows[l] += dw;
          g.rows[j] -= dw;
        }
      }
      return g;
    }
    default: break;
  }
  throw std::logic_error("FrozenMetric::gradient: bad id");
}

GradientField metric_gradient(MetricId id, const PointCloud& x,
                              const PointCloud& y, int k) {
  return freeze_metric(id, x, y, k).gradient(y);
}

MetricEvaluator::MetricEvaluator(PointCloud x, std::vector<MetricId> ids,
                                 int k, double smooth_gamma)
    : x_(std::move(x)), ids_(std::move(ids)), k_(k),
      smooth_gamma_(smooth_gamma) {
  if (x_.has_normals() && x_.size() > k_) {
    kappa_clean_ = clean_curvatures(x_, k_);
  }
}

double MetricEvaluator::value(MetricId id, const PointCloud& y) const {
  if (id == MetricId::Curv) {
    const std::vector<double>* cache =
        kappa_clean_.empty() ? nullptr : &kappa_clean_;
    return curv_value(build_curv_state(x_, y, k_, cache), y);
  }
  return metric_value(id, x_, y, k_, smooth_gamma_);
}

double MetricEvaluator::sum(const PointCloud& y) const {
  double s = 0.0;
  for (MetricId id : ids_) s += value(id, y);
  return s;
}

FrozenMetric MetricEvaluator::freeze(MetricId id, const PointCloud& y) const {
  return freeze_metric(id, x_, y, k_,
                       kappa_clean_.empty() ? nullptr : &kappa_clean_);
}

}  // namespace eidos
