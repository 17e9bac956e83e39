#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eidos/attack.hpp"
#include "eidos/classifier.hpp"
#include "eidos/geometry.hpp"

namespace eidos {

/// Statistical outlier removal: drops every point whose mean distance to its
/// k nearest neighbors exceeds mu + alpha*sigma (population sigma). Survivor
/// order follows the input. If everything would be dropped, the single point
/// with the smallest statistic is kept and `empty_guard` is set.
std::vector<int> sor_keep(const PointCloud& cloud, int k, double alpha,
                          bool* empty_guard = nullptr);
PointCloud sor(const PointCloud& cloud, int k, double alpha,
               bool* empty_guard = nullptr);

/// Simple random sampling: keeps a uniform subset of n - drop points,
/// order-preserving, deterministic per seed. Requires drop < n.
std::vector<int> srs_keep(const PointCloud& cloud, int drop,
                          std::uint64_t seed);
PointCloud srs(const PointCloud& cloud, int drop, std::uint64_t seed);

/// Input purifier abstraction: maps a cloud and a draw seed to the surviving
/// indices. Deterministic purifiers ignore the seed.
struct Purifier {
  std::function<std::vector<int>(const PointCloud&, std::uint64_t)> keep;
  bool randomized = false;
};

Purifier sor_purifier(int k, double alpha);
Purifier srs_purifier(int drop);

PointCloud apply_purifier(const Purifier& defense, const PointCloud& cloud,
                          std::uint64_t seed);

/// Expectation-over-transformation gradient: averages the margin-loss input
/// gradient over n_samples purifier draws; points removed by a draw get zero
/// rows in the full-cloud indexing. Deterministic purifiers are evaluated
/// once, which makes the result exactly the single-sample gradient.
GradientField eot_gradient(const ClassifierParams& params,
                           const Purifier& defense, const PointCloud& cloud,
                           int t, int n_samples, std::uint64_t seed);

/// Attack surface for the defense-wrapped classifier: labels and losses are
/// evaluated on purified clouds (randomized defenses consume one draw per
/// call from a seeded stream) and gradients go through eot_gradient.
AttackModel defended_model(const ClassifierParams& params,
                           const Purifier& defense, int eot_samples,
                           std::uint64_t seed);

}  // namespace eidos
