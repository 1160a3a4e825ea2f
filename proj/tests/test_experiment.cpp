// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "wicount/config.hpp"
#include "wicount/error.hpp"
#include "wicount/experiment.hpp"
#include "wicount/log.hpp"
#include "wicount/records.hpp"
#include "wicount/report.hpp"
#include "wicount/splits.hpp"

using namespace wicount;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> o = {"output_dir=\"" + out.string() + "\"",
                                "dataset.synthetic.n_samples=30",
                                "dataset.synthetic.t_length=60",
                                "transform.target_length=60",
                                "transform.resolution=32",
                                "train.epochs=1",
                                "protocol.seeds=[0,1,2]"};
  o.insert(o.end(), extra.begin(), extra.end());
  return load_config(WICOUNT_SOURCE_DIR "/configs/synthetic_smoke.json", o);
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string l;
  std::getline(in, l);
  return l;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct Quiet {
  Quiet() { set_log_level(LogLevel::warn); }
  ~Quiet() { set_log_level(LogLevel::info); }
};

}  // namespace

TEST_CASE("prepare writes a fingerprinted summary and split files") {
  Quiet q;
  const auto out = test::scratch_dir("prepare");
  const auto cfg = small_config(out);
  const auto j = cmd_prepare(cfg);
  const fs::path dir = out / "prepared" / cfg.fingerprint();
  REQUIRE(fs::exists(dir / "summary.json"));
  CHECK(read_json(dir / "summary.json").at("summary").at("total") == 30);
  for (int i = 0; i < 3; ++i) {
    const auto f = dir / ("split_" + std::to_string(i) + ".txt");
    REQUIRE(fs::exists(f));
    CHECK(first_line(f) == "# config " + cfg.fingerprint());
    const auto s = read_split(f);
    CHECK(s.train_ids.size() + s.test_ids.size() == 30);
  }
  fs::remove_all(out);
}

TEST_CASE("protocol and filter combinations are validated") {
  const auto out = test::scratch_dir("combos");
  auto cfg = small_config(out, {"protocol.kind=loeo", "dataset.environment=meeting"});
  const auto data = load_experiment_dataset(cfg);
  CHECK_THROWS_AS(make_splits(cfg, data.manifest()), ConfigError);
  cfg = small_config(out, {"model.pretrained=true", "model.weights_path=\"/nonexistent.safetensors\""});
  CHECK_THROWS_AS(cmd_train(cfg), CheckpointError);
  CHECK_FALSE(fs::exists(out / "runs"));
  fs::remove_all(out);
}

TEST_CASE("validation carve-out is deterministic and disjoint") {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("id" + std::to_string(i));
  const auto [a_train, a_val] = carve_validation(ids, 0.2, 3);
  const auto [b_train, b_val] = carve_validation(ids, 0.2, 3);
  CHECK(a_val == b_val);
  CHECK(a_val.size() == 10);
  CHECK(a_train.size() == 40);
  std::set<std::string> t(a_train.begin(), a_train.end());
  for (const auto& v : a_val) CHECK_FALSE(t.count(v));
  CHECK(carve_validation(ids, 0.0, 3).second.empty());
}

TEST_CASE("train, evaluate, analyze and report over three seeds") {
  Quiet q;
  const auto out = test::scratch_dir("pipeline");
  const auto cfg = small_config(out);
  CHECK(render_report({}).markdown == "no runs\n");
  CHECK(discover_runs(out).empty());

  const fs::path run = cmd_train(cfg);
  CHECK(run.filename().string().find("synthetic_smoke-identity_agnostic-standard-") == 0);
  CHECK(run.filename().string().ends_with("-001"));
  const json record = read_json(run / "run_record.json");
  CHECK(record.at("complete") == true);
  REQUIRE(record.at("splits").size() == 3);
  for (int i = 0; i < 3; ++i) {
    const fs::path s = run / ("split_" + std::to_string(i));
    CHECK(fs::exists(s / "checkpoint_last.pt"));
    CHECK(fs::exists(s / "checkpoint_best.pt"));
    CHECK(fs::exists(s / "training_log.json"));
    CHECK(first_line(s / "split.txt") == "# config " + cfg.fingerprint());
  }
  CHECK(latest_run(cfg) == run);
  CHECK(run_config(run).fingerprint() == cfg.fingerprint());

  // Re-evaluating the stored checkpoints reproduces the in-process metrics.
  const json ev = cmd_evaluate(run, CheckpointChoice::selected);
  CHECK(fs::exists(run / "evaluation.json"));
  for (int i = 0; i < 3; ++i) {
    CHECK(ev.at("splits")[i].at("scalars") == record.at("splits")[i].at("metrics").at("scalars"));
  }
  cmd_evaluate(run, CheckpointChoice::last);
  CHECK(fs::exists(run / "evaluation-2.json"));
  CHECK(fs::exists(run / "evaluation.json"));

  const json inv = cmd_analyze(run);
  CHECK(inv.at("splits").size() == 3);
  CHECK(fs::exists(run / "invariance.json"));

  // Report: MAE mean and SD across the three splits, recomputed here.
  std::vector<double> maes;
  for (const auto& s : ev.at("splits")) maes.push_back(s.at("scalars").at("mae").get<double>());
  double mean = 0;
  for (double v : maes) mean += v / 3.0;
  double var = 0;
  for (double v : maes) var += (v - mean) * (v - mean) / 3.0;
  const auto rep = render_report(discover_runs(out));
  INFO(rep.markdown);
  CHECK(rep.markdown.find(fmt4(mean) + " ± " + fmt4(std::sqrt(var))) != std::string::npos);
  CHECK(rep.markdown.find(cfg.group_fingerprint()) != std::string::npos);

  // Per-user-count curve: pooled mean/SD over all test samples of all splits,
  // recomputed from raw predictions of the stored checkpoints.
  std::map<std::size_t, std::vector<double>> errs;
  const auto data = load_experiment_dataset(cfg);
  for (int i = 0; i < 3; ++i) {
    const fs::path s = run / ("split_" + std::to_string(i));
    const auto split = read_split(s / "split.txt");
    ModelSpec ms = cfg.model;
    ms.task = cfg.task;
    ms.pretrained = false;
    auto model = build_model(ms);
    load_checkpoint(s / "checkpoint_last.pt", model, nullptr);
    const auto p = predict(model, data, split.test_ids, cfg.transform);
    for (std::size_t k = 0; k < p.truths.size(); ++k) {
      const auto truth = oracle::tally(p.truths[k]);
      double e = 0;
      for (std::size_t a = 0; a < kActivities; ++a) e += std::fabs(p.counts[k][a] - truth[a]);
      errs[p.truths[k].present_count()].push_back(e / kActivities);
    }
  }
  const auto& curve = rep.series.at("per_user_count").at(0).at("counts");
  for (const auto& [users, es] : errs) {
    double m = 0;
    for (double e : es) m += e / static_cast<double>(es.size());
    double v = 0;
    for (double e : es) v += (e - m) * (e - m) / static_cast<double>(es.size());
    const auto& c = curve.at(std::to_string(users));
    CHECK(c.at("samples") == es.size());
    CHECK(c.at("mean").get<double>() == doctest::Approx(m).epsilon(1e-9));
    CHECK(c.at("sd").get<double>() == doctest::Approx(std::sqrt(v)).epsilon(1e-6));
  }

  const std::string written = cmd_report(discover_runs(out), out);
  CHECK(written == rep.markdown);
  CHECK(fs::exists(out / "reports" / "report-001" / "report.md"));
  CHECK(fs::exists(out / "reports" / "report-001" / "series.json"));

  // A second run under the same label but a different configuration must
  // not be pooled silently.
  const auto other = small_config(out, {"train.weight_decay=0.05", "protocol.seeds=[0]"});
  const fs::path run2 = cmd_train(other);
  CHECK(run2 != run);
  CHECK_THROWS_AS(render_report(discover_runs(out)), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("interrupted training resumes into the same run") {
  Quiet q;
  const auto out = test::scratch_dir("interrupt");
  const auto cfg = small_config(out, {"protocol.seeds=[0]", "train.epochs=2"});
  TrainOptions stop;
  stop.stop_after_steps = 2;
  const fs::path run = cmd_train(cfg, stop);
  CHECK(read_json(run / "run_record.json").at("complete") == false);
  CHECK_THROWS(latest_run(cfg));
  TrainOptions resume;
  resume.resume_run = run;
  CHECK(cmd_train(cfg, resume) == run);
  const json rec = read_json(run / "run_record.json");
  CHECK(rec.at("complete") == true);
  CHECK(fs::exists(run / "split_0" / "training_log-2.json"));
  const auto changed = small_config(out, {"protocol.seeds=[0]", "train.epochs=3"});
  CHECK_THROWS_AS(cmd_train(changed, resume), CheckpointError);
  fs::remove_all(out);
}
