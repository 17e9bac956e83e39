#include "eidos/defense.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "eidos/rng.hpp"

namespace eidos {

std::vector<int> sor_keep(const PointCloud& cloud, int k, double alpha,
                          bool* empty_guard) {
  const int n = cloud.size();
  if (k < 1 || k >= n) throw std::invalid_argument("sor: need 1 <= k < n");
  if (!(alpha > 0.0)) throw std::invalid_argument("sor: alpha > 0");
  if (empty_guard) *empty_guard = false;

  const NeighborTable nbrs = knn(cloud, k);
  std::vector<double> stat(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j : nbrs.rows[i]) s += (cloud.points[i] - cloud.points[j]).norm();
    stat[i] = s / k;
  }
  double mu = 0.0;
  for (double v : stat) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : stat) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / n);
  const double threshold = mu + alpha * sigma;

  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (stat[i] <= threshold) keep.push_back(i);
  }
  if (keep.empty()) {
    if (empty_guard) *empty_guard = true;
    int arg = 0;
    for (int i = 1; i < n; ++i) {
      if (stat[i] < stat[arg]) arg = i;
    }
    keep.push_back(arg);
  }
  return keep;
}

namespace {

PointCloud take(const PointCloud& cloud, const std::vector<int>& keep) {
  PointCloud out;
  out.points.reserve(keep.size());
  for (int i : keep) out.points.push_back(cloud.points[i]);
  if (cloud.has_normals()) {
    out.normals.reserve(keep.size());
    for (int i : keep) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

}  // namespace

PointCloud sor(const PointCloud& cloud, int k, double alpha,
               bool* empty_guard) {
  return take(cloud, sor_keep(cloud, k, alpha, empty_guard));
}

std::vector<int> srs_keep(const PointCloud& cloud, int drop,
                          std::uint64_t seed) {
  const int n = cloud.size();
  if (drop < 0 || drop >= n) {
    throw std::invalid_argument("srs: need 0 <= drop < n");
  }
  // Fisher-Yates prefix of size n-drop, then restored to input order
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  RngStream rng(seed);
  const int keep_count = n - drop;
  for (int i = 0; i < keep_count; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<int> keep(idx.begin(), idx.begin() + keep_count);
  std::sort(keep.begin(), keep.end());
  return keep;
}

PointCloud srs(const PointCloud& cloud, int drop, std::uint64_t seed) {
  return take(cloud, srs_keep(cloud, drop, seed));
}

Purifier sor_purifier(int k, double alpha) {
  Purifier p;
  p.randomized = false;
  p.keep = [k, alpha](const PointCloud& cloud, std::uint64_t) {
    return sor_keep(cloud, k, alpha);
  };
  return p;
}

Purifier srs_purifier(int drop) {
  Purifier p;
  p.randomized = true;
  p.keep = [drop](const PointCloud& cloud, std::uint64_t seed) {
    return srs_keep(cloud, drop, seed);
  };
  return p;
}

PointCloud apply_purifier(const Purifier& defense, const PointCloud& cloud,
                          std::uint64_t seed) {
  return take(cloud, defense.keep(cloud, seed));
}

GradientField eot_gradient(const ClassifierParams& params,
                           const Purifier& defense, const PointCloud& cloud,
                           int t, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("eot_gradient: n_samples >= 1");
  const int draws = defense.randomized ? n_samples : 1;

  GradientField out;
  out.provenance = "margin loss averaged over purifier draws";
  out.rows.assign(cloud.size(), Vec3::Zero());
  for (int s = 0; s < draws; ++s) {
    const std::vector<int> keep = defense.keep(cloud, mix_seed(seed, s));
    const GradientField g = input_gradient(params, take(cloud, keep), t);
    for (std::size_t m = 0; m < keep.size(); ++m) {
      out.rows[keep[m]] += g.rows[m];
    }
  }
  for (auto& r : out.rows) r /= draws;
  return out;
}

AttackModel defended_model(const ClassifierParams& params,
                           const Purifier& defense, int eot_samples,
                           std::uint64_t seed) {
  auto p = std::make_shared<const ClassifierParams>(params);
  auto def = std::make_shared<const Purifier>(defense);
  // one defended evaluation per call, drawn from a deterministic stream;
  // a model instance is meant for a single (sequential) attack run
  auto counter = std::make_shared<std::uint64_t>(0);

  AttackModel m;
  m.label = [p, def, seed, counter](const PointCloud& cloud) {
    return predict(*p, apply_purifier(*def, cloud, mix_seed(seed, (*counter)++)));
  };
  m.loss = [p, def, seed, counter](const PointCloud& cloud, int t) {
    return margin_loss(
        forward(*p, apply_purifier(*def, cloud, mix_seed(seed, (*counter)++))),
        t);
  };
  m.loss_gradient = [p, def, eot_samples, seed, counter](
                        const PointCloud& cloud, int t) {
    return eot_gradient(*p, *def, cloud, t, eot_samples,
                        mix_seed(seed, 0x10000000ull + (*counter)++));
  };
  return m;
}

}  // namespace eidos
