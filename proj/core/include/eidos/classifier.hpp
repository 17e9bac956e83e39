#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eidos/geometry.hpp"
#include "eidos/metrics.hpp"

namespace eidos {

/// Small permutation-invariant point-cloud classifier:
/// shared per-point encoder 3 -> h1 -> h2 (tanh after each affine),
/// coordinatewise max pool over points, head h2 -> h3 -> c (tanh between).
/// Max pooling makes the logits invariant to any permutation of input rows.
struct ClassifierParams {
  std::vector<int> widths;   // {3, h1, h2, h3, c}
  std::string activation;    // "tanh"
  Eigen::MatrixXd enc1_w;    // h1 x 3
  Eigen::VectorXd enc1_b;
  Eigen::MatrixXd enc2_w;    // h2 x h1
  Eigen::VectorXd enc2_b;
  Eigen::MatrixXd head1_w;   // h3 x h2
  Eigen::VectorXd head1_b;
  Eigen::MatrixXd head2_w;   // c x h3
  Eigen::VectorXd head2_b;

  int num_classes() const { return widths.empty() ? 0 : widths.back(); }
};

/// Seeded uniform init in +-sqrt(6/(fan_in+fan_out)), zero biases.
ClassifierParams init_params(const std::vector<int>& widths,
                             std::uint64_t seed);

Eigen::VectorXd forward(const ClassifierParams& params,
                        const PointCloud& cloud);

/// argmax of the logits, ties to the lowest class index.
int predict(const ClassifierParams& params, const PointCloud& cloud);

/// Exact gradient of the margin loss f_t - max_{k != t} f_k with respect to
/// the n x 3 coordinates; pool and class argmaxes take the lowest index.
GradientField input_gradient(const ClassifierParams& params,
                             const PointCloud& cloud, int t);

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int epochs = 50;
  int batch_size = 16;
  std::uint64_t seed = 1;
};

struct TrainReport {
  ClassifierParams params;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
  double final_accuracy = 0.0;     // on the training set
};

/// Momentum SGD on softmax cross-entropy. Deterministic per seed (fixed
/// initialization and shuffling streams). Requires epochs >= 1 and at least
/// two distinct labels.
TrainReport train(const std::vector<std::pair<PointCloud, int>>& dataset,
                  const TrainConfig& cfg);

// --- checkpoint --------------------------------------------------------------
// Versioned decimal-text container: "format_version 1", widths, activation,
// then one "name rows cols" header plus row-major values per tensor. Values
// are written with 17 significant digits, so save/load round-trips exactly.

std::string serialize(const ClassifierParams& params);
ClassifierParams deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path,
                     const ClassifierParams& params);
ClassifierParams load_checkpoint(const std::filesystem::path& path);

}  // namespace eidos
