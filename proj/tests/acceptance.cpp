// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fail. Heavier end-to-end runs share one trained toy classifier and one
// held-out suite; per-sample work fans out over a small worker pool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eidos/attack.hpp"
#include "eidos/blackbox.hpp"
#include "eidos/classifier.hpp"
#include "eidos/defense.hpp"
#include "eidos/eval.hpp"
#include "eidos/geometry.hpp"
#include "eidos/metrics.hpp"
#include "eidos/rng.hpp"
#include "oracles.hpp"

using namespace eidos;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kJobs = 2;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& outcome,
            double seconds) {
  std::printf("[%s] %d. %s (%.1fs)%s%s\n", outcome.pass ? "PASS" : "FAIL", id,
              name.c_str(), seconds, outcome.detail.empty() ? "" : ": ",
              outcome.detail.c_str());
  std::fflush(stdout);
  if (!outcome.pass) ++g_failures;
}

void run_criterion(int id, const std::string& name,
                   const std::function<void(Outcome&)>& body) {
  Outcome outcome;
  const auto start = Clock::now();
  try {
    body(outcome);
  } catch (const std::exception& e) {
    outcome.require(false, std::string("exception: ") + e.what());
  }
  report(id, name, outcome,
         std::chrono::duration<double>(Clock::now() - start).count());
}

template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (int w = 0; w < kJobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    }));
  }
  for (auto& w : workers) w.get();
}

// ---- shared toy suite -------------------------------------------------------

DatasetSpec toy_train_spec() {
  DatasetSpec spec;
  spec.classes = {ShapeKind::Sphere, ShapeKind::Cube, ShapeKind::Cylinder,
                  ShapeKind::Torus};
  spec.per_class = 100;
  spec.points = 256;
  spec.scale_aug = 0.5;
  spec.seed = 42;
  return spec;
}

DatasetSpec toy_heldout_spec() {
  DatasetSpec spec = toy_train_spec();
  spec.per_class = 25;  // 100 held-out clouds
  spec.seed = 777;
  return spec;
}

struct Suite {
  ClassifierParams params;
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  double train_seconds = 0.0;
  std::vector<std::pair<PointCloud, int>> heldout;
};

Suite g_suite;

struct SuiteStats {
  int successes = 0;          // over all held-out clouds
  int attacked = 0;
  std::vector<EvalRecord> records;
  double mean(MetricId metric) const {
    double acc = 0.0;
    int n = 0;
    for (const auto& r : records) {
      if (!r.success) continue;
      acc += record_distance(r, metric);
      ++n;
    }
    return n ? acc / n : std::numeric_limits<double>::infinity();
  }
};

/// Attacks every held-out cloud (misclassified ones count as failures) and
/// re-verifies each reported success against the raw classifier.
SuiteStats run_suite(const AttackConfig& cfg, const std::string& method,
                     Outcome& outcome) {
  SuiteStats stats;
  stats.records.resize(g_suite.heldout.size());
  std::atomic<int> successes{0}, attacked{0}, verify_failures{0};
  parallel_for(g_suite.heldout.size(), [&](std::size_t i) {
    const auto& [x, label] = g_suite.heldout[i];
    EvalRecord& rec = stats.records[i];
    char id[32];
    std::snprintf(id, sizeof(id), "heldout_%03zu", i);
    rec.sample_id = id;
    rec.method = method;
    if (predict(g_suite.params, x) != label) return;
    ++attacked;
    const AttackResult res = eidos_attack(g_suite.params, x, label, cfg);
    if (!res.success) return;
    if (predict(g_suite.params, res.best) == label) {
      ++verify_failures;
      return;
    }
    ++successes;
    rec.success = true;
    rec.l2 = res.l2;
    rec.cd = res.cd;
    rec.hd = res.hd;
    rec.curv = res.curv;
    rec.smooth = res.smooth;
    rec.time_s = 0.0;
  });
  stats.successes = successes.load();
  stats.attacked = attacked.load();
  outcome.require(verify_failures.load() == 0,
                  "some successes failed re-verification");
  return stats;
}

// ---- criteria ---------------------------------------------------------------

void criterion1_gradients(Outcome& outcome) {
  // metrics: frozen-surrogate finite differences on 50 random clouds
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 32 + static_cast<int>(RngStream(600 + trial).uniform_int(33));
    PointCloud x = normalize_unit_ball(oracle::random_cloud(n, 700 + trial));
    x = estimate_normals(x, 8);
    PointCloud y = x;
    RngStream rng(800 + trial);
    for (auto& p : y.points) {
      p += Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                rng.uniform(-0.05, 0.05));
    }
    for (MetricId id :
         {MetricId::L2, MetricId::CD, MetricId::HD, MetricId::Curv}) {
      const FrozenMetric frozen = freeze_metric(id, x, y, 8);
      const GradientField analytic = frozen.gradient(y);
      const auto numeric = oracle::finite_difference(
          [&](const PointCloud& probe) { return frozen.value(probe); }, y);
      const double worst = oracle::gradient_mismatch(analytic.rows, numeric);
      outcome.require(worst <= 1.0,
                      metric_name(id) + " gradient mismatch on trial " +
                          std::to_string(trial));
      if (!outcome.pass) return;
    }
  }

  // classifier margin loss: redraw instances where a pooled index or the
  // runner-up class flips under the +-h probes
  const double h = 1e-5;
  int done = 0;
  std::uint64_t draw = 0;
  while (done < 50 && draw < 500) {
    ++draw;
    const auto params = init_params({3, 16, 24, 16, 4}, 4000 + draw);
    const int n = 32 + static_cast<int>(RngStream(5000 + draw).uniform_int(33));
    const auto cloud = oracle::random_cloud(n, 6000 + draw, 0.8);
    const int t = 0;

    const auto analytic = input_gradient(params, cloud, t);
    const auto numeric = oracle::finite_difference(
        [&](const PointCloud& y) { return margin_loss(forward(params, y), t); },
        cloud, h);
    if (oracle::gradient_mismatch(analytic.rows, numeric) <= 1.0) {
      ++done;
      continue;
    }
    // mismatch: accept the redraw only if a discrete branch actually flipped
    const auto base = oracle::scalar_forward(params, cloud, t);
    bool flipped = false;
    PointCloud probe = cloud;
    for (int i = 0; i < cloud.size() && !flipped; ++i) {
      for (int c = 0; c < 3 && !flipped; ++c) {
        for (double sign : {1.0, -1.0}) {
          const double orig = probe.points[i][c];
          probe.points[i][c] = orig + sign * h;
          const auto probed = oracle::scalar_forward(params, probe, t);
          probe.points[i][c] = orig;
          if (probed.pool_argmax != base.pool_argmax ||
              probed.runner_up != base.runner_up) {
            flipped = true;
            break;
          }
        }
      }
    }
    outcome.require(flipped, "margin-loss gradient mismatch without a branch "
                             "flip on draw " + std::to_string(draw));
    if (!outcome.pass) return;
  }
  outcome.require(done == 50, "could not assemble 50 clean instances");
}

void criterion2_gram_schmidt(Outcome& outcome) {
  RngStream rng(2300);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 8 + static_cast<int>(rng.uniform_int(121));
    const int dim = 3 * n;
    const int m = 1 + static_cast<int>(rng.uniform_int(4));
    std::vector<Eigen::VectorXd> in;
    for (int v = 0; v < m + 1; ++v) {
      Eigen::VectorXd x(dim);
      for (int i = 0; i < dim; ++i) x[i] = rng.normal();
      in.push_back(x.normalized());
    }
    const Eigen::VectorXd ghat = in[0];
    const auto out = gram_schmidt(in);
    outcome.require(out.size() <= static_cast<std::size_t>(m), "cardinality");
    for (std::size_t a = 0; a < out.size(); ++a) {
      outcome.require(std::abs(out[a].norm() - 1.0) < 1e-6, "unit norm");
      outcome.require(std::abs(out[a].dot(ghat)) < 1e-6,
                      "orthogonality to the gradient");
      for (std::size_t b = a + 1; b < out.size(); ++b) {
        outcome.require(std::abs(out[a].dot(out[b])) < 1e-6,
                        "pairwise orthogonality");
      }
    }
    if (!outcome.pass) {
      outcome.note("trial " + std::to_string(trial));
      return;
    }
  }

  // collinear inputs are dropped
  Eigen::VectorXd g(6), dup(6);
  g << 1, 0, 0, 0, 0, 0;
  dup = 2.0 * g;
  outcome.require(gram_schmidt({g, dup}).empty(), "collinear drop");
}

void criterion3_metric_identities(Outcome& outcome) {
  PointCloud x = sample_shape(ShapeKind::Torus, 128, 31);
  x = estimate_normals(x, 16);
  outcome.require(l2_distance(x, x) == 0.0, "l2 identity");
  outcome.require(chamfer(x, x) == 0.0, "cd identity");
  outcome.require(hausdorff(x, x) == 0.0, "hd identity");
  outcome.require(curvature_consistency(x, x, 16) < 1e-9, "curv identity");

  for (int trial = 0; trial < 500; ++trial) {
    const auto a = oracle::random_cloud(16, 3000 + trial);
    const auto b = oracle::random_cloud(16, 4000 + trial);
    if (hausdorff(a, b) < chamfer(a, b)) {
      outcome.require(false, "hd < cd on trial " + std::to_string(trial));
      return;
    }
  }

  PointCloud cube;
  for (int i = 0; i < 8; ++i) {
    cube.points.emplace_back(i & 1 ? 1.0 : 0.0, i & 2 ? 1.0 : 0.0,
                             i & 4 ? 1.0 : 0.0);
  }
  outcome.require(knn_smoothness(cube, 3, 1.05) == 0.0, "smoothness on grid");
  PointCloud square;
  square.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  outcome.require(knn_smoothness(square, 2, 1.05) == 0.0,
                  "smoothness on square");
}

SuiteStats g_l2_stats;  // reused by criteria 5 and 6

void criterion4_end_to_end(Outcome& outcome) {
  const auto start = Clock::now();

  {  // training
    const auto t0 = Clock::now();
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = 7;
    const auto report = train(build_dataset(toy_train_spec()), cfg);
    g_suite.params = report.params;
    g_suite.epoch_loss = report.epoch_loss;
    g_suite.train_accuracy = report.final_accuracy;
    g_suite.train_seconds =
        std::chrono::duration<double>(Clock::now() - t0).count();
    g_suite.heldout = build_dataset(toy_heldout_spec());

    outcome.require(report.final_accuracy >= 0.95,
                    "training accuracy " +
                        std::to_string(report.final_accuracy) + " < 0.95");
    outcome.require(g_suite.train_seconds < 300.0, "training exceeded 5 min");
    outcome.note("train acc " + format_double(report.final_accuracy));
  }

  {  // D = {L2}, fixed step, K = 200
    AttackConfig cfg;
    cfg.regularizers = {MetricId::L2};
    cfg.step = 0.06;
    cfg.max_iters = 200;
    cfg.k = 16;
    g_l2_stats = run_suite(cfg, "eidos:l2", outcome);
    outcome.require(g_l2_stats.successes >= 95,
                    "L2 run successes " + std::to_string(g_l2_stats.successes) +
                        "/100 < 95");
    outcome.note("L2 " + std::to_string(g_l2_stats.successes) + "/100");
  }

  {  // D = {L2, CD, HD, Curv}, adaptive step, K = 100
    AttackConfig cfg;
    cfg.regularizers = {MetricId::L2, MetricId::CD, MetricId::HD,
                        MetricId::Curv};
    cfg.step = 0.06;
    cfg.schedule = StepSchedule::Adaptive;
    cfg.decay = 0.01;  // default 0.05 decays too fast at this scale
    cfg.max_iters = 100;
    cfg.k = 16;
    const auto stats = run_suite(cfg, "eidos:l2+cd+hd+curv", outcome);
    outcome.require(stats.successes >= 95,
                    "all-regularizer successes " +
                        std::to_string(stats.successes) + "/100 < 95");
    outcome.note("all " + std::to_string(stats.successes) + "/100");
  }

  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  outcome.require(total < 600.0, "criterion exceeded 10 minutes");
}

void criterion5_single_regularizers(Outcome& outcome) {
  const MetricId regs[] = {MetricId::L2, MetricId::CD, MetricId::HD,
                           MetricId::Curv};
  SuiteStats stats[4];
  stats[0] = g_l2_stats;
  for (int r = 1; r < 4; ++r) {
    AttackConfig cfg;
    cfg.regularizers = {regs[r]};
    cfg.step = 0.06;
    cfg.max_iters = 200;
    cfg.k = 16;
    stats[r] = run_suite(cfg, "eidos:" + metric_name(regs[r]), outcome);
    outcome.require(stats[r].successes > 0,
                    metric_name(regs[r]) + " run found no successes");
  }
  if (!outcome.pass) return;

  const MetricId columns[] = {MetricId::L2, MetricId::CD, MetricId::HD};
  for (int m = 0; m < 3; ++m) {
    int best = 0;
    for (int r = 1; r < 4; ++r) {
      if (stats[r].mean(columns[m]) < stats[best].mean(columns[m])) best = r;
    }
    outcome.require(best == m, "metric " + metric_name(columns[m]) +
                                   " minimized by the " +
                                   metric_name(regs[best]) + " run");
  }

  int best_smooth = 0, best_curv = 0;
  for (int r = 1; r < 4; ++r) {
    if (stats[r].mean(MetricId::Smooth) < stats[best_smooth].mean(MetricId::Smooth))
      best_smooth = r;
    if (stats[r].mean(MetricId::Curv) < stats[best_curv].mean(MetricId::Curv))
      best_curv = r;
  }
  const bool smooth_branch = best_smooth == 3;
  const bool curv_branch = best_curv == 3;
  outcome.require(smooth_branch || curv_branch,
                  "curv run minimized neither smooth nor curv");
  outcome.note(std::string("curv run holds ") +
               (smooth_branch && curv_branch
                    ? "both the smooth and curv branches"
                    : (smooth_branch ? "the smooth branch"
                                     : "the curv branch")));
}

void criterion6_operating_characteristic(Outcome& outcome) {
  // mix in genuine failures: a 1-iteration budget cannot reach the boundary
  std::vector<EvalRecord> records = g_l2_stats.records;
  {
    AttackConfig cfg;
    cfg.regularizers = {MetricId::L2};
    cfg.step = 0.06;
    cfg.max_iters = 1;
    cfg.k = 16;
    for (int i = 0; i < 5; ++i) {
      const auto& [x, label] = g_suite.heldout[i];
      if (predict(g_suite.params, x) != label) continue;
      const auto res = eidos_attack(g_suite.params, x, label, cfg);
      EvalRecord rec;
      rec.sample_id = "budget1_" + std::to_string(i);
      rec.method = "eidos:l2-k1";
      rec.success = res.success;
      if (res.success) {
        rec.l2 = res.l2;
        rec.cd = res.cd;
        rec.hd = res.hd;
        rec.curv = res.curv;
        rec.smooth = res.smooth;
      }
      records.push_back(rec);
    }
  }

  const fs::path dir = fs::temp_directory_path() / "eidos_acceptance";
  fs::create_directories(dir);
  const fs::path csv = dir / "oc_records.csv";
  write_results_csv(csv, records);
  const auto loaded = read_results_csv(csv);

  const auto grid = default_grid(loaded, MetricId::L2);
  const auto curve = operating_characteristic(loaded, MetricId::L2, grid);
  outcome.require(!curve.no_successes, "curve unexpectedly empty");
  if (curve.no_successes) return;

  outcome.require(curve.p.front() == 0.0, "P(0) != 0");
  outcome.require(curve.p.back() == success_rate(loaded),
                  "P(D_max) != P_suc exactly");
  for (std::size_t i = 1; i < curve.p.size(); ++i) {
    if (curve.p[i] < curve.p[i - 1]) {
      outcome.require(false, "curve decreases at index " + std::to_string(i));
      break;
    }
  }

  // brute-force counting oracle over the raw CSV
  for (std::size_t i = 0; i < grid.size(); ++i) {
    int count = 0;
    for (const auto& r : loaded) {
      if (r.success && r.l2 < grid[i]) ++count;
    }
    const double expected = static_cast<double>(count) / loaded.size();
    if (curve.p[i] != expected) {
      outcome.require(false, "counting oracle mismatch at grid index " +
                                 std::to_string(i));
      break;
    }
  }
  fs::remove_all(dir);
}

void criterion7_defenses(Outcome& outcome) {
  {  // SOR on a cluster with injected outliers
    PointCloud cloud;
    RngStream rng(71);
    for (int i = 0; i < 256; ++i) {
      cloud.points.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                rng.uniform(-0.5, 0.5));
    }
    for (int i = 0; i < 20; ++i) {
      const Vec3 dir(rng.normal(), rng.normal(), rng.normal());
      cloud.points.push_back(dir.normalized() * rng.uniform(8.0, 16.0));
    }
    const auto kept = sor_keep(cloud, 2, 1.1);

    int inliers_kept = 0, outliers_kept = 0;
    for (int i : kept) (i < 256 ? inliers_kept : outliers_kept)++;
    outcome.require(20 - outliers_kept >= 18, "removed only " +
                                                  std::to_string(20 - outliers_kept) +
                                                  "/20 outliers");
    outcome.require(inliers_kept >= 244, "kept only " +
                                             std::to_string(inliers_kept) +
                                             "/256 inliers");

    // brute-force statistic oracle reproduces the survivor set exactly
    const auto rows = oracle::brute_knn(cloud, 2);
    std::vector<double> stat(cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
      double s = 0.0;
      for (int j : rows[i]) s += (cloud.points[i] - cloud.points[j]).norm();
      stat[i] = s / 2;
    }
    double mu = 0.0;
    for (double v : stat) mu += v;
    mu /= stat.size();
    double var = 0.0;
    for (double v : stat) var += (v - mu) * (v - mu);
    const double threshold = mu + 1.1 * std::sqrt(var / stat.size());
    std::vector<int> expected;
    for (int i = 0; i < cloud.size(); ++i) {
      if (stat[i] <= threshold) expected.push_back(i);
    }
    outcome.require(kept == expected, "survivors differ from the oracle");
  }

  {  // SRS accounting
    const auto cloud = sample_shape(ShapeKind::Sphere, 1024, 73);
    const auto kept = srs_keep(cloud, 500, 9);
    outcome.require(kept.size() == 524, "srs cardinality");
    outcome.require(std::is_sorted(kept.begin(), kept.end()) &&
                        std::adjacent_find(kept.begin(), kept.end()) ==
                            kept.end(),
                    "srs order/duplicates");
    outcome.require(kept.front() >= 0 && kept.back() < 1024, "srs range");
    outcome.require(srs_keep(cloud, 500, 9) == kept, "srs determinism");
  }

  {  // EOT n=100 vs n=1 against SRS on a toy subset
    const int samples = 12, drop = 128;
    const auto purifier = srs_purifier(drop);
    auto run = [&](int eot) {
      std::atomic<int> successes{0};
      parallel_for(samples, [&](std::size_t i) {
        const auto& [x, label] = g_suite.heldout[i * 7];
        const auto model =
            defended_model(g_suite.params, purifier, eot, mix_seed(1234, i));
        if (model.label(x) != label) return;
        AttackConfig cfg;
        cfg.regularizers = {MetricId::L2};
        cfg.step = 0.06;
        cfg.max_iters = 60;
        cfg.k = 16;
        if (eidos_attack(model, x, label, cfg).success) ++successes;
      });
      return successes.load();
    };
    const int eot1 = run(1);
    const int eot100 = run(100);
    outcome.require(eot100 >= eot1, "eot100 " + std::to_string(eot100) +
                                        " < eot1 " + std::to_string(eot1));
    outcome.note("eot1 " + std::to_string(eot1) + "/12, eot100 " +
                 std::to_string(eot100) + "/12");
  }
}

void criterion8_blackbox(Outcome& outcome) {
  BlackboxConfig cfg;
  cfg.regularizers = {MetricId::L2, MetricId::CD, MetricId::HD, MetricId::Curv};
  cfg.k = 16;
  cfg.eps1 = 1.5;
  cfg.eps2 = 0.75;

  const auto model = make_model(g_suite.params);
  std::atomic<int> successes{0};
  std::atomic<bool> tangent_ok{true}, accounting_ok{true};
  parallel_for(g_suite.heldout.size(), [&](std::size_t i) {
    const auto& [x, label] = g_suite.heldout[i];
    if (predict(g_suite.params, x) != label) return;

    std::atomic<long> counted{0};
    const LabelOracle oracle_fn = [&](const PointCloud& y) {
      counted.fetch_add(1);
      return model.label(y);
    };
    const auto xn = estimate_normals(x, cfg.k);
    const auto bb = blackbox_attack(g_suite.params, oracle_fn, xn, label, cfg);
    if (bb.result.success) ++successes;

    for (const auto& probe : bb.probe_log) {
      if (std::abs(probe.delta.dot(xn.normals[probe.point])) >= 1e-9) {
        tangent_ok = false;
      }
    }
    if (bb.queries != counted.load() ||
        bb.queries != bb.probe_queries + bb.refine_queries ||
        bb.probe_queries > 2 * bb.points_probed) {
      accounting_ok = false;
    }
  });

  outcome.require(successes >= 80, "blackbox successes " +
                                       std::to_string(successes.load()) +
                                       "/100 < 80");
  outcome.require(tangent_ok.load(), "a probe left its tangent plane");
  outcome.require(accounting_ok.load(), "query accounting mismatch");
  outcome.note(std::to_string(successes.load()) + "/100");
}

void criterion9_determinism(Outcome& outcome) {
  const fs::path dir = fs::temp_directory_path() / "eidos_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = EIDOS_CLI_PATH;

  const auto sh = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  for (const std::string run : {"one", "two"}) {
    const std::string base = (dir / run).string();
    bool ok = sh("gen-data --out " + base +
                 "/train --classes sphere,cube --per-class 10 --points 64 "
                 "--seed 11 --scale-aug 0.5");
    ok = ok && sh("gen-data --out " + base +
                  "/eval --classes sphere,cube --per-class 4 --points 64 "
                  "--seed 99 --scale-aug 0.5");
    ok = ok && sh("train --data " + base + "/train --out " + base +
                  "/model.ckpt --epochs 30 --seed 5");
    ok = ok && sh("attack --model " + base + "/model.ckpt --data " + base +
                  "/eval --out " + base +
                  "/results.csv --reg l2,cd --max-iters 120 --k 8 "
                  "--timer off --jobs 2 --seed 3");
    ok = ok && sh("eval --results " + base + "/results.csv --oc-metric l2 "
                  "--oc-out " + base + "/curve.tsv");
    outcome.require(ok, "pipeline run '" + run + "' failed");
    if (!ok) return;
  }

  std::vector<fs::path> relatives;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "one")) {
    if (entry.is_regular_file()) {
      relatives.push_back(fs::relative(entry.path(), dir / "one"));
    }
  }
  std::sort(relatives.begin(), relatives.end());
  outcome.require(!relatives.empty(), "no outputs produced");
  for (const auto& rel : relatives) {
    if (slurp(dir / "one" / rel) != slurp(dir / "two" / rel)) {
      outcome.require(false, "byte mismatch in " + rel.string());
      break;
    }
  }
  outcome.note(std::to_string(relatives.size()) + " files byte-identical");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  run_criterion(1, "gradient fidelity vs finite differences",
                criterion1_gradients);
  run_criterion(2, "orthonormalization contract", criterion2_gram_schmidt);
  run_criterion(3, "metric identities", criterion3_metric_identities);
  run_criterion(4, "end-to-end attack success", criterion4_end_to_end);
  run_criterion(5, "single-regularizer optimality", criterion5_single_regularizers);
  run_criterion(6, "operating characteristic endpoints",
                criterion6_operating_characteristic);
  run_criterion(7, "defense pipeline", criterion7_defenses);
  run_criterion(8, "black-box self-transfer", criterion8_blackbox);
  run_criterion(9, "byte-identical reruns", criterion9_determinism);

  if (g_failures > 0) {
    std::printf("%d criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
