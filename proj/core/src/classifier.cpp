#include "eidos/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eidos/rng.hpp"

namespace eidos {

namespace {

struct ForwardCache {
  Eigen::MatrixXd z1;       // h1 x n, tanh of first encoder layer
  Eigen::MatrixXd z2;       // h2 x n, tanh of second encoder layer
  Eigen::VectorXd pooled;   // h2
  std::vector<int> argmax;  // pooled feature -> contributing point
  Eigen::VectorXd z3;       // h3
  Eigen::VectorXd logits;   // c
};

void check_params(const ClassifierParams& p) {
  if (p.widths.size() != 5 || p.widths[0] != 3 || p.widths.back() < 2) {
    throw std::invalid_argument("classifier: widths must be {3,h1,h2,h3,c}, c>=2");
  }
  if (p.activation != "tanh") {
    throw std::invalid_argument("classifier: unsupported activation " +
                                p.activation);
  }
}

ForwardCache run_forward(const ClassifierParams& p, const PointCloud& cloud) {
  check_params(p);
  const int n = cloud.size();
  if (n < 1) throw std::invalid_argument("classifier: empty cloud");

  ForwardCache fc;
  Eigen::MatrixXd coords(3, n);
  for (int i = 0; i < n; ++i) coords.col(i) = cloud.points[i];

  fc.z1 = ((p.enc1_w * coords).colwise() + p.enc1_b).array().tanh();
  fc.z2 = ((p.enc2_w * fc.z1).colwise() + p.enc2_b).array().tanh();

  const int h2 = static_cast<int>(fc.z2.rows());
  fc.pooled.resize(h2);
  fc.argmax.assign(h2, 0);
  for (int d = 0; d < h2; ++d) {
    double best = fc.z2(d, 0);
    int arg = 0;
    for (int i = 1; i < n; ++i) {
      if (fc.z2(d, i) > best) {  // strict: ties keep the lowest index
        best = fc.z2(d, i);
        arg = i;
      }
    }
    fc.pooled[d] = best;
    fc.argmax[d] = arg;
  }

  fc.z3 = ((p.head1_w * fc.pooled) + p.head1_b).array().tanh();
  fc.logits = p.head2_w * fc.z3 + p.head2_b;
  return fc;
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int arg = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[arg]) arg = i;
  }
  return arg;
}

int runner_up(const Eigen::VectorXd& logits, int t) {
  int arg = -1;
  for (int k = 0; k < logits.size(); ++k) {
    if (k == t) continue;
    if (arg < 0 || logits[k] > logits[arg]) arg = k;
  }
  return arg;
}

struct ParamGrads {
  Eigen::MatrixXd enc1_w, enc2_w, head1_w, head2_w;
  Eigen::VectorXd enc1_b, enc2_b, head1_b, head2_b;

  static ParamGrads zeros(const ClassifierParams& p) {
    ParamGrads g;
    g.enc1_w = Eigen::MatrixXd::Zero(p.enc1_w.rows(), p.enc1_w.cols());
    g.enc2_w = Eigen::MatrixXd::Zero(p.enc2_w.rows(), p.enc2_w.cols());
    g.head1_w = Eigen::MatrixXd::Zero(p.head1_w.rows(), p.head1_w.cols());
    g.head2_w = Eigen::MatrixXd::Zero(p.head2_w.rows(), p.head2_w.cols());
    g.enc1_b = Eigen::VectorXd::Zero(p.enc1_b.size());
    g.enc2_b = Eigen::VectorXd::Zero(p.enc2_b.size());
    g.head1_b = Eigen::VectorXd::Zero(p.head1_b.size());
    g.head2_b = Eigen::VectorXd::Zero(p.head2_b.size());
    return g;
  }
};

/// Backprop from d(loss)/d(logits). Fills input rows when `input_grad` is
/// given and accumulates parameter gradients when `pg` is given.
void run_backward(const ClassifierParams& p, const PointCloud& cloud,
                  const ForwardCache& fc, const Eigen::VectorXd& dlogits,
                  std::vector<Vec3>* input_grad, ParamGrads* pg) {
  const int n = cloud.size();
  const int h2 = static_cast<int>(fc.z2.rows());

  const Eigen::VectorXd dz3 = p.head2_w.transpose() * dlogits;
  const Eigen::VectorXd da3 =
      dz3.array() * (1.0 - fc.z3.array() * fc.z3.array());
  const Eigen::VectorXd dpooled = p.head1_w.transpose() * da3;

  if (pg) {
    pg->head2_w += dlogits * fc.z3.transpose();
    pg->head2_b += dlogits;
    pg->head1_w += da3 * fc.pooled.transpose();
    pg->head1_b += da3;
  }

  // pool: each feature routes its gradient to the single argmax point
  Eigen::MatrixXd dz2 = Eigen::MatrixXd::Zero(h2, n);
  for (int d = 0; d < h2; ++d) dz2(d, fc.argmax[d]) = dpooled[d];

  const Eigen::MatrixXd da2 =
      dz2.array() * (1.0 - fc.z2.array() * fc.z2.array());
  const Eigen::MatrixXd dz1 = p.enc2_w.transpose() * da2;
  const Eigen::MatrixXd da1 =
      dz1.array() * (1.0 - fc.z1.array() * fc.z1.array());

  if (pg) {
    Eigen::MatrixXd coords(3, n);
    for (int i = 0; i < n; ++i) coords.col(i) = cloud.points[i];
    pg->enc2_w += da2 * fc.z1.transpose();
    pg->enc2_b += da2.rowwise().sum();
    pg->enc1_w += da1 * coords.transpose();
    pg->enc1_b += da1.rowwise().sum();
  }

  if (input_grad) {
    const Eigen::MatrixXd dcoords = p.enc1_w.transpose() * da1;
    input_grad->resize(n);
    for (int i = 0; i < n; ++i) (*input_grad)[i] = dcoords.col(i);
  }
}

Eigen::MatrixXd xavier(int rows, int cols, RngStream& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

ClassifierParams init_params(const std::vector<int>& widths,
                             std::uint64_t seed) {
  ClassifierParams p;
  p.widths = widths;
  p.activation = "tanh";
  check_params(p);
  RngStream rng(seed);
  p.enc1_w = xavier(widths[1], widths[0], rng);
  p.enc1_b = Eigen::VectorXd::Zero(widths[1]);
  p.enc2_w = xavier(widths[2], widths[1], rng);
  p.enc2_b = Eigen::VectorXd::Zero(widths[2]);
  p.head1_w = xavier(widths[3], widths[2], rng);
  p.head1_b = Eigen::VectorXd::Zero(widths[3]);
  p.head2_w = xavier(widths[4], widths[3], rng);
  p.head2_b = Eigen::VectorXd::Zero(widths[4]);
  return p;
}

Eigen::VectorXd forward(const ClassifierParams& params,
                        const PointCloud& cloud) {
  return run_forward(params, cloud).logits;
}

int predict(const ClassifierParams& params, const PointCloud& cloud) {
  return argmax_lowest(forward(params, cloud));
}

GradientField input_gradient(const ClassifierParams& params,
                             const PointCloud& cloud, int t) {
  const ForwardCache fc = run_forward(params, cloud);
  if (t < 0 || t >= fc.logits.size()) {
    throw std::invalid_argument("input_gradient: label out of range");
  }
  Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(fc.logits.size());
  dlogits[t] = 1.0;
  dlogits[runner_up(fc.logits, t)] -= 1.0;

  GradientField g;
  g.provenance = "margin loss: pool and runner-up class argmaxes frozen";
  run_backward(params, cloud, fc, dlogits, &g.rows, nullptr);
  return g;
}

TrainReport train(const std::vector<std::pair<PointCloud, int>>& dataset,
                  const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs >= 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: lr > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size >= 1");

  std::set<int> labels;
  int max_label = 0;
  for (const auto& [cloud, label] : dataset) {
    if (label < 0) throw std::invalid_argument("train: negative label");
    labels.insert(label);
    max_label = std::max(max_label, label);
  }
  if (labels.size() < 2) {
    throw std::invalid_argument("train: need at least two classes");
  }

  TrainReport report;
  report.params = init_params({3, 32, 64, 32, max_label + 1},
                              mix_seed(cfg.seed, 0));
  ClassifierParams& p = report.params;
  ParamGrads vel = ParamGrads::zeros(p);

  const int n = static_cast<int>(dataset.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng(mix_seed(cfg.seed, 1 + epoch));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_int(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      ParamGrads grads = ParamGrads::zeros(p);
      for (int s = start; s < end; ++s) {
        const auto& [cloud, label] = dataset[order[s]];
        const ForwardCache fc = run_forward(p, cloud);
        // softmax cross-entropy, shifted for stability
        const Eigen::VectorXd shifted =
            fc.logits.array() - fc.logits.maxCoeff();
        const Eigen::VectorXd expv = shifted.array().exp();
        const Eigen::VectorXd prob = expv / expv.sum();
        epoch_loss += -std::log(std::max(prob[label], 1e-300));
        Eigen::VectorXd dlogits = prob;
        dlogits[label] -= 1.0;
        run_backward(p, cloud, fc, dlogits, nullptr, &grads);
      }
      const double scale = 1.0 / (end - start);
      auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& v,
                        const Eigen::MatrixXd& g) {
        v = cfg.momentum * v - cfg.lr * scale * g;
        w += v;
      };
      auto update_vec = [&](Eigen::VectorXd& w, Eigen::VectorXd& v,
                            const Eigen::VectorXd& g) {
        v = cfg.momentum * v - cfg.lr * scale * g;
        w += v;
      };
      update(p.enc1_w, vel.enc1_w, grads.enc1_w);
      update_vec(p.enc1_b, vel.enc1_b, grads.enc1_b);
      update(p.enc2_w, vel.enc2_w, grads.enc2_w);
      update_vec(p.enc2_b, vel.enc2_b, grads.enc2_b);
      update(p.head1_w, vel.head1_w, grads.head1_w);
      update_vec(p.head1_b, vel.head1_b, grads.head1_b);
      update(p.head2_w, vel.head2_w, grads.head2_w);
      update_vec(p.head2_b, vel.head2_b, grads.head2_b);
    }
    report.epoch_loss.push_back(epoch_loss / n);
  }

  int correct = 0;
  for (const auto& [cloud, label] : dataset) {
    if (predict(p, cloud) == label) ++correct;
  }
  report.final_accuracy = static_cast<double>(correct) / n;
  return report;
}

namespace {

void write_tensor(std::ostream& out, const char* name,
                  const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      out << format_double(m(r, c)) << (c + 1 < m.cols() ? ' ' : '\n');
    }
  }
}

void write_tensor(std::ostream& out, const char* name,
                  const Eigen::VectorXd& v) {
  out << name << ' ' << v.size() << " 1\n";
  for (int r = 0; r < v.size(); ++r) {
    out << format_double(v[r]) << '\n';
  }
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& bytes) : in_(bytes) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw std::runtime_error("checkpoint: truncated file");
    return w;
  }
  long integer() {
    long v;
    if (!(in_ >> v)) throw std::runtime_error("checkpoint: truncated file");
    return v;
  }
  double real() {
    double v;
    if (!(in_ >> v)) throw std::runtime_error("checkpoint: truncated file");
    return v;
  }
  bool at_end() {
    std::string w;
    return !(in_ >> w);
  }

 private:
  std::istringstream in_;
};

Eigen::MatrixXd read_tensor(TokenReader& r, const char* name, long rows,
                            long cols) {
  if (r.word() != name) {
    throw std::runtime_error(std::string("checkpoint: expected tensor ") + name);
  }
  if (r.integer() != rows || r.integer() != cols) {
    throw std::runtime_error(std::string("checkpoint: shape mismatch for ") +
                             name);
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) m(i, j) = r.real();
  }
  return m;
}

}  // namespace

std::string serialize(const ClassifierParams& params) {
  check_params(params);
  std::ostringstream out;
  out << "format_version 1\n";
  out << "widths";
  for (int w : params.widths) out << ' ' << w;
  out << '\n';
  out << "activation " << params.activation << '\n';
  write_tensor(out, "enc1_w", params.enc1_w);
  write_tensor(out, "enc1_b", params.enc1_b);
  write_tensor(out, "enc2_w", params.enc2_w);
  write_tensor(out, "enc2_b", params.enc2_b);
  write_tensor(out, "head1_w", params.head1_w);
  write_tensor(out, "head1_b", params.head1_b);
  write_tensor(out, "head2_w", params.head2_w);
  write_tensor(out, "head2_b", params.head2_b);
  return out.str();
}

ClassifierParams deserialize(const std::string& bytes) {
  TokenReader r(bytes);
  if (r.word() != "format_version") {
    throw std::runtime_error("checkpoint: missing format_version");
  }
  const long version = r.integer();
  if (version != 1) {
    throw std::runtime_error("checkpoint: unsupported format_version " +
                             std::to_string(version));
  }
  ClassifierParams p;
  if (r.word() != "widths") throw std::runtime_error("checkpoint: missing widths");
  for (int i = 0; i < 5; ++i) p.widths.push_back(static_cast<int>(r.integer()));
  if (r.word() != "activation") {
    throw std::runtime_error("checkpoint: missing activation");
  }
  p.activation = r.word();
  check_params(p);

  const auto& w = p.widths;
  p.enc1_w = read_tensor(r, "enc1_w", w[1], w[0]);
  p.enc1_b = read_tensor(r, "enc1_b", w[1], 1);
  p.enc2_w = read_tensor(r, "enc2_w", w[2], w[1]);
  p.enc2_b = read_tensor(r, "enc2_b", w[2], 1);
  p.head1_w = read_tensor(r, "head1_w", w[3], w[2]);
  p.head1_b = read_tensor(r, "head1_b", w[3], 1);
  p.head2_w = read_tensor(r, "head2_w", w[4], w[3]);
  p.head2_b = read_tensor(r, "head2_b", w[4], 1);
  if (!r.at_end()) {
    throw std::runtime_error("checkpoint: trailing data");
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path,
                     const ClassifierParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << serialize(params);
}

ClassifierParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace eidos
