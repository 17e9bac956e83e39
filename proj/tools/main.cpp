#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
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

namespace fs = std::filesystem;
using namespace eidos;

namespace {

std::vector<MetricId> parse_regularizers(const std::string& list) {
  std::vector<MetricId> regs;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string name = list.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) {
      const MetricId id = parse_metric(name);  // throws on unknown names
      if (id == MetricId::Smooth) {
        throw CLI::ValidationError(
            "--reg", "smooth is evaluation-only and cannot drive an attack");
      }
      regs.push_back(id);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (regs.empty()) {
    throw CLI::ValidationError("--reg", "need at least one regularizer");
  }
  return regs;
}

std::string regs_tag(const std::vector<MetricId>& regs) {
  std::string tag;
  for (const auto id : regs) {
    if (!tag.empty()) tag += '+';
    tag += metric_name(id);
  }
  return tag;
}

struct Sample {
  std::string id;
  PointCloud cloud;
  int label = 0;
};

std::vector<Sample> load_samples(const fs::path& data_dir) {
  const auto entries = load_manifest(data_dir / "manifest.csv");
  std::vector<Sample> samples;
  samples.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s;
    s.id = fs::path(e.path).stem().string();
    s.cloud = load_cloud(data_dir / e.path);
    s.label = e.label;
    samples.push_back(std::move(s));
  }
  return samples;
}

/// Runs `fn` over sample indices with up to `jobs` workers; results land in
/// index order regardless of completion order.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn fn) {
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (int w = 0; w < jobs; ++w) {
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

EvalRecord record_from_result(const Sample& s, const std::string& method,
                              const AttackResult& res, bool wall_timer) {
  EvalRecord r;
  r.sample_id = s.id;
  r.method = method;
  r.success = res.success;
  if (res.success) {
    r.l2 = res.l2;
    r.cd = res.cd;
    r.hd = res.hd;
    r.curv = res.curv;
    r.smooth = res.smooth;
  }
  r.time_s = wall_timer ? res.wall_seconds : 0.0;
  return r;
}

void write_trace_file(const fs::path& dir, const std::string& id,
                      const std::vector<TraceRow>& trace) {
  std::ofstream out(dir / (id + ".trace"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace for " + id);
  out << format_trace(trace);
}

int cmd_gen_data(const std::string& out_dir, const std::string& classes,
                 int per_class, int points, std::uint64_t seed,
                 double scale_aug) {
  DatasetSpec spec;
  std::size_t start = 0;
  std::vector<std::string> names;
  while (start <= classes.size()) {
    const auto comma = classes.find(',', start);
    const std::string name = classes.substr(
        start,
        comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) {
      spec.classes.push_back(parse_shape(name));
      names.push_back(name);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (std::size_t a = 0; a < names.size(); ++a) {
    for (std::size_t b = a + 1; b < names.size(); ++b) {
      if (names[a] == names[b]) {
        throw CLI::ValidationError("--classes", "duplicate class " + names[a]);
      }
    }
  }
  spec.per_class = per_class;
  spec.points = points;
  spec.seed = seed;
  spec.scale_aug = scale_aug;

  const auto data = build_dataset(spec);
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> manifest;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data[i].second;
    const int index = static_cast<int>(i) - label * per_class;
    char file[64];
    std::snprintf(file, sizeof(file), "%s_%03d.xyz", names[label].c_str(),
                  index);
    save_cloud(fs::path(out_dir) / file, data[i].first);
    manifest.push_back({file, label});
  }
  save_manifest(fs::path(out_dir) / "manifest.csv", manifest);
  std::cout << "wrote " << data.size() << " clouds to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_path,
              int epochs, double lr, double momentum, int batch,
              std::uint64_t seed) {
  const auto samples = load_samples(data_dir);
  std::vector<std::pair<PointCloud, int>> dataset;
  dataset.reserve(samples.size());
  for (const auto& s : samples) dataset.emplace_back(s.cloud, s.label);

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.momentum = momentum;
  cfg.batch_size = batch;
  cfg.seed = seed;
  const auto report = train(dataset, cfg);
  save_checkpoint(out_path, report.params);
  std::cout << "training accuracy " << format_double(report.final_accuracy)
            << " over " << dataset.size() << " clouds; checkpoint " << out_path
            << "\n";
  return 0;
}

struct AttackFlags {
  std::string model, data, out, trace_dir, reg = "l2";
  std::string schedule = "fixed", timer = "wall";
  double step = 0.06, decay = 0.05;
  int max_iters = 100, k = 16, jobs = 1;
  std::uint64_t seed = 1;
};

AttackConfig attack_config(const AttackFlags& f) {
  AttackConfig cfg;
  cfg.regularizers = parse_regularizers(f.reg);
  cfg.step = f.step;
  if (f.schedule == "fixed") {
    cfg.schedule = StepSchedule::Fixed;
  } else if (f.schedule == "adaptive") {
    cfg.schedule = StepSchedule::Adaptive;
  } else {
    throw CLI::ValidationError("--schedule", "must be fixed or adaptive");
  }
  cfg.decay = f.decay;
  cfg.max_iters = f.max_iters;
  cfg.k = f.k;
  cfg.seed = f.seed;
  return cfg;
}

int run_attack_pipeline(const AttackFlags& f,
                        const std::string& method_suffix,
                        const std::function<AttackModel(std::size_t)>& model_for,
                        int metric_k) {
  const auto samples = load_samples(f.data);
  AttackConfig cfg = attack_config(f);
  cfg.k = metric_k;
  const std::string method = "eidos:" + regs_tag(cfg.regularizers) + method_suffix;
  const bool wall_timer = f.timer == "wall";
  if (!wall_timer && f.timer != "off") {
    throw CLI::ValidationError("--timer", "must be wall or off");
  }
  if (!f.trace_dir.empty()) fs::create_directories(f.trace_dir);

  std::vector<std::optional<EvalRecord>> rows(samples.size());
  std::atomic<int> skipped{0};
  parallel_for(samples.size(), f.jobs, [&](std::size_t i) {
    const Sample& s = samples[i];
    const AttackModel model = model_for(i);
    if (model.label(s.cloud) != s.label) {
      ++skipped;
      return;
    }
    const AttackResult res = eidos_attack(model, s.cloud, s.label, cfg);
    rows[i] = record_from_result(s, method, res, wall_timer);
    if (!f.trace_dir.empty()) write_trace_file(f.trace_dir, s.id, res.trace);
  });

  std::vector<EvalRecord> records;
  for (auto& r : rows) {
    if (r) records.push_back(std::move(*r));
  }
  write_results_csv(f.out, records);

  int successes = 0;
  for (const auto& r : records) successes += r.success;
  std::cout << "attacked " << records.size() << " samples (skipped "
            << skipped.load() << " misclassified); successes " << successes
            << "; results " << f.out << "\n";
  if (!records.empty()) std::cout << format_summary(summarize(records));
  return 0;
}

int cmd_attack(const AttackFlags& f) {
  const auto params = load_checkpoint(f.model);
  const AttackModel model = make_model(params);
  return run_attack_pipeline(
      f, "", [&](std::size_t) { return model; }, f.k);
}

struct DefenseFlags {
  std::string defense = "sor";
  int sor_k = 2;
  double alpha = 1.1;
  int drop = 500;
  int eot = 100;
  int metric_k = 16;
};

int cmd_defend_attack(const AttackFlags& f, const DefenseFlags& d) {
  const auto params = load_checkpoint(f.model);
  Purifier purifier;
  if (d.defense == "sor") {
    purifier = sor_purifier(d.sor_k, d.alpha);
  } else if (d.defense == "srs") {
    purifier = srs_purifier(d.drop);
  } else {
    throw CLI::ValidationError("--defense", "must be sor or srs");
  }
  const int eot = purifier.randomized ? d.eot : 1;
  return run_attack_pipeline(
      f, "@" + d.defense,
      [&, eot](std::size_t i) {
        return defended_model(params, purifier, eot, mix_seed(f.seed, i));
      },
      d.metric_k);
}

struct BlackboxFlags {
  std::string surrogate, target, data, out;
  std::string reg = "l2", timer = "wall";
  double eps1 = 0.32, eps2 = 0.16;
  long budget = 1000000;
  int k = 16, jobs = 1;
  std::uint64_t seed = 1;
};

int cmd_blackbox(const BlackboxFlags& f) {
  const auto surrogate = load_checkpoint(f.surrogate);
  const auto target_params = load_checkpoint(f.target);
  const AttackModel target = make_model(target_params);
  const auto samples = load_samples(f.data);

  BlackboxConfig cfg;
  cfg.regularizers = parse_regularizers(f.reg);
  cfg.eps1 = f.eps1;
  cfg.eps2 = f.eps2;
  cfg.query_budget = f.budget;
  cfg.k = f.k;
  const std::string method = "eidos-bb:" + regs_tag(cfg.regularizers);
  const bool wall_timer = f.timer == "wall";
  if (!wall_timer && f.timer != "off") {
    throw CLI::ValidationError("--timer", "must be wall or off");
  }

  std::vector<std::optional<EvalRecord>> rows(samples.size());
  std::vector<long> queries(samples.size(), 0);
  std::atomic<int> skipped{0};
  parallel_for(samples.size(), f.jobs, [&](std::size_t i) {
    const Sample& s = samples[i];
    if (target.label(s.cloud) != s.label) {
      ++skipped;
      return;
    }
    const BlackboxResult bb =
        blackbox_attack(surrogate, target.label, s.cloud, s.label, cfg);
    rows[i] = record_from_result(s, method, bb.result, wall_timer);
    queries[i] = bb.queries;
  });

  std::vector<EvalRecord> records;
  long total_queries = 0;
  std::ofstream qout(f.out + ".queries.tsv", std::ios::binary);
  if (!qout) throw std::runtime_error("cannot write " + f.out + ".queries.tsv");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!rows[i]) continue;
    records.push_back(std::move(*rows[i]));
    qout << samples[i].id << '\t' << queries[i] << '\n';
    total_queries += queries[i];
  }
  write_results_csv(f.out, records);

  int successes = 0;
  for (const auto& r : records) successes += r.success;
  std::cout << "attacked " << records.size() << " samples (skipped "
            << skipped.load() << " misclassified); successes " << successes
            << "; total queries " << total_queries << "; results " << f.out
            << "\n";
  if (!records.empty()) std::cout << format_summary(summarize(records));
  return 0;
}

int cmd_eval(const std::string& results, const std::string& oc_metric,
             const std::string& oc_out) {
  const auto records = read_results_csv(results);
  if (records.empty()) throw std::runtime_error("no records in " + results);
  std::cout << format_summary(summarize(records));

  if (!oc_out.empty()) {
    const MetricId metric = parse_metric(oc_metric);
    const auto curve = operating_characteristic(records, metric,
                                                default_grid(records, metric));
    if (curve.no_successes) {
      std::cout << "no successes; operating characteristic is empty\n";
    }
    write_oc_tsv(oc_out, curve);
    std::cout << "operating characteristic (" << oc_metric << ") in " << oc_out
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial point-cloud attack toolkit"};
  app.require_subcommand(1);

  // gen-data
  std::string gd_out, gd_classes = "sphere,cube,cylinder,torus";
  int gd_per_class = 100, gd_points = 256;
  std::uint64_t gd_seed = 1;
  double gd_scale_aug = 0.0;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--out", gd_out, "output directory")->required();
  gen->add_option("--classes", gd_classes, "comma-separated shape names");
  gen->add_option("--per-class", gd_per_class, "clouds per class");
  gen->add_option("--points", gd_points, "points per cloud");
  gen->add_option("--seed", gd_seed, "sampling seed");
  gen->add_option("--scale-aug", gd_scale_aug,
                  "per-axis random scale span in [0,1)");

  // train
  std::string tr_data, tr_out;
  int tr_epochs = 30, tr_batch = 16;
  double tr_lr = 0.01, tr_momentum = 0.9;
  std::uint64_t tr_seed = 1;
  auto* tr = app.add_subcommand("train", "train the point-cloud classifier");
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--momentum", tr_momentum, "SGD momentum");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--seed", tr_seed, "init/shuffle seed");

  // attack
  AttackFlags at;
  auto* atk = app.add_subcommand("attack", "white-box two-phase attack");
  atk->add_option("--model", at.model, "classifier checkpoint")->required();
  atk->add_option("--data", at.data, "dataset directory")->required();
  atk->add_option("--out", at.out, "results CSV path")->required();
  atk->add_option("--reg", at.reg, "regularizers: comma list of l2,cd,hd,curv");
  atk->add_option("--step", at.step, "step size epsilon");
  atk->add_option("--schedule", at.schedule, "fixed or adaptive");
  atk->add_option("--decay", at.decay, "adaptive decay in (0,1)");
  atk->add_option("--max-iters", at.max_iters, "iteration budget K");
  atk->add_option("--k", at.k, "neighborhood size for curvature");
  atk->add_option("--trace", at.trace_dir, "directory for per-sample traces");
  atk->add_option("--seed", at.seed, "run seed");
  atk->add_option("--jobs", at.jobs, "concurrent attack jobs");
  atk->add_option("--timer", at.timer, "wall or off (time_s column)");

  // defend-attack
  AttackFlags da;
  DefenseFlags df;
  auto* dfa = app.add_subcommand("defend-attack",
                                 "attack a defense-wrapped classifier");
  dfa->add_option("--model", da.model, "classifier checkpoint")->required();
  dfa->add_option("--data", da.data, "dataset directory")->required();
  dfa->add_option("--out", da.out, "results CSV path")->required();
  dfa->add_option("--defense", df.defense, "sor or srs");
  dfa->add_option("--k", df.sor_k, "SOR neighbor count");
  dfa->add_option("--alpha", df.alpha, "SOR threshold multiplier");
  dfa->add_option("--drop", df.drop, "SRS drop count");
  dfa->add_option("--eot", df.eot, "gradient draws for randomized defenses");
  dfa->add_option("--metric-k", df.metric_k, "neighborhood size for curvature");
  dfa->add_option("--reg", da.reg, "regularizers: comma list of l2,cd,hd,curv");
  dfa->add_option("--step", da.step, "step size epsilon");
  dfa->add_option("--schedule", da.schedule, "fixed or adaptive");
  dfa->add_option("--decay", da.decay, "adaptive decay in (0,1)");
  dfa->add_option("--max-iters", da.max_iters, "iteration budget K");
  dfa->add_option("--trace", da.trace_dir, "directory for per-sample traces");
  dfa->add_option("--seed", da.seed, "run seed (drives defense draws)");
  dfa->add_option("--jobs", da.jobs, "concurrent attack jobs");
  dfa->add_option("--timer", da.timer, "wall or off (time_s column)");

  // blackbox
  BlackboxFlags bb;
  auto* bbx = app.add_subcommand("blackbox", "query-based black-box attack");
  bbx->add_option("--surrogate", bb.surrogate, "surrogate checkpoint")
      ->required();
  bbx->add_option("--target", bb.target, "target checkpoint")->required();
  bbx->add_option("--data", bb.data, "dataset directory")->required();
  bbx->add_option("--out", bb.out, "results CSV path")->required();
  bbx->add_option("--eps1", bb.eps1, "misclassification probe step");
  bbx->add_option("--eps2", bb.eps2, "refinement step");
  bbx->add_option("--budget", bb.budget, "query budget");
  bbx->add_option("--reg", bb.reg, "regularizers: comma list of l2,cd,hd,curv");
  bbx->add_option("--k", bb.k, "neighborhood size");
  bbx->add_option("--seed", bb.seed, "run seed");
  bbx->add_option("--jobs", bb.jobs, "concurrent attack jobs");
  bbx->add_option("--timer", bb.timer, "wall or off (time_s column)");

  // eval
  std::string ev_results, ev_metric = "l2", ev_out;
  auto* ev = app.add_subcommand("eval", "summarize a results CSV");
  ev->add_option("--results", ev_results, "results CSV path")->required();
  ev->add_option("--oc-metric", ev_metric, "metric for the curve");
  ev->add_option("--oc-out", ev_out, "operating characteristic TSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gd_out, gd_classes, gd_per_class, gd_points, gd_seed,
                          gd_scale_aug);
    }
    if (tr->parsed()) {
      return cmd_train(tr_data, tr_out, tr_epochs, tr_lr, tr_momentum,
                       tr_batch, tr_seed);
    }
    if (atk->parsed()) return cmd_attack(at);
    if (dfa->parsed()) return cmd_defend_attack(da, df);
    if (bbx->parsed()) return cmd_blackbox(bb);
    if (ev->parsed()) return cmd_eval(ev_results, ev_metric, ev_out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
