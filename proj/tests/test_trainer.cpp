// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include <torch/torch.h>

#include "doctest.h"
#include "test_util.hpp"
#include "wicount/error.hpp"
#include "wicount/synthetic.hpp"
#include "wicount/trainer.hpp"

using namespace wicount;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset(std::size_t n = 24) {
  SyntheticSpec spec;
  spec.n_samples = n;
  spec.t_length = 40;
  spec.seed = 9;
  spec.user_assignment = UserAssignment::random_users;
  spec.user_signature_strength = 0.1;
  auto syn = generate_synthetic(spec);
  return Dataset::from_memory(syn.manifest, syn.samples);
}

std::vector<std::string> all_ids(const Dataset& d) {
  std::vector<std::string> ids;
  for (const auto& e : d.manifest().entries) ids.push_back(e.sample_id);
  return ids;
}

TransformConfig tiny_transform() {
  TransformConfig t;
  t.target_length = 40;
  t.resolution = 32;
  return t;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.model_selection = ModelSelection::last;
  return c;
}

CsiNet tiny_model(Task task, std::uint64_t seed = 0) {
  ModelSpec s;
  s.task = task;
  s.backbone = BackboneKind::mobilenet_v3_small;
  s.pretrained = false;
  s.init_seed = seed;
  s.batchnorm_momentum = 0.1;
  return build_model(s);
}

bool same_state(CsiNet& a, CsiNet& b) {
  const auto pa = a->named_parameters(), pb = b->named_parameters();
  for (const auto& p : pa) {
    if (!torch::equal(p.value(), pb[p.key()])) return false;
  }
  const auto ba = a->named_buffers(), bb = b->named_buffers();
  for (const auto& p : ba) {
    if (!torch::equal(p.value(), bb[p.key()])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parameter groups partition the trainable parameters") {
  auto m = tiny_model(Task::identity_agnostic);
  const auto groups = parameter_groups(m, tiny_train());
  REQUIRE(groups.size() == 2);
  std::size_t total = 0;
  for (const auto& g : groups) total += g.params().size();
  std::size_t trainable = 0;
  for (const auto& p : m->parameters()) trainable += p.requires_grad();
  CHECK(total == trainable);
  CHECK(groups[0].params().size() == 2);  // projection weight and bias
}

TEST_CASE("clipping caps an oversized global gradient norm") {
  auto m = tiny_model(Task::identity_agnostic);
  m->train();
  const auto x = torch::randn({4, 1, 32, 32}) * 50;
  const auto y = torch::full({4, 9}, 1000.0);
  count_loss(m->forward(x), y).backward();
  std::vector<torch::Tensor> params;
  for (const auto& p : m->parameters()) params.push_back(p);
  const double before = global_grad_norm(params);
  REQUIRE(before > 10.0);
  const double reported = clip_global_norm(params, 1.0);
  CHECK(reported == doctest::Approx(before));
  CHECK(global_grad_norm(params) <= 1.0 + 1e-5);
  // Small gradients are untouched.
  for (auto& p : params) p.mutable_grad() = torch::full_like(p, 1e-6);
  const double small = global_grad_norm(params);
  clip_global_norm(params, 1.0);
  CHECK(global_grad_norm(params) == doctest::Approx(small));
}

TEST_CASE("fit follows the two-group schedule and clips every step") {
  const auto data = tiny_dataset();
  auto m = tiny_model(Task::identity_agnostic);
  auto cfg = tiny_train();
  cfg.epochs = 4;
  const auto log = fit(m, data, all_ids(data), {}, cfg, tiny_transform());
  CHECK(log.steps_per_epoch == 3);
  CHECK(log.total_steps == 12);
  REQUIRE(log.steps.size() == 12);
  const auto sched = GroupSchedules::make(cfg, 3);
  for (const auto& s : log.steps) {
    CHECK(s.lr_projection == sched.projection_lr(s.step));
    CHECK(s.lr_body == sched.body_lr(s.step));
    CHECK(s.lr_projection == doctest::Approx(10.0 * s.lr_body));
    CHECK(s.clipped_norm <= cfg.clip_max_norm + 1e-5);
    CHECK(std::isfinite(s.loss));
  }
  CHECK(log.epochs.size() == 4);
}

TEST_CASE("epoch granularity holds the rate constant within an epoch") {
  auto cfg = tiny_train();
  cfg.epochs = 10;
  cfg.schedule_granularity = ScheduleGranularity::epoch;
  const auto s = GroupSchedules::make(cfg, 5);
  for (std::int64_t e = 0; e < 10; ++e) {
    for (std::int64_t b = 1; b < 5; ++b) CHECK(s.body_lr(e * 5 + b) == s.body_lr(e * 5));
  }
  CHECK(s.body_lr(0) == doctest::Approx(cfg.lr_backbone_head_peak));
}

TEST_CASE("one step moves the weights and training is deterministic") {
  const auto data = tiny_dataset();
  auto cfg = tiny_train();
  for (auto task : {Task::identity_dependent, Task::identity_agnostic}) {
    auto init = tiny_model(task);
    auto a = tiny_model(task);
    auto b = tiny_model(task);
    FitOptions one;
    one.stop_after_steps = 1;
    const auto la = fit(a, data, all_ids(data), {}, cfg, tiny_transform(), one);
    CHECK(la.steps.size() == 1);
    CHECK_FALSE(same_state(a, init));
    fit(b, data, all_ids(data), {}, cfg, tiny_transform(), one);
    CHECK(same_state(a, b));
  }
}

TEST_CASE("checkpoint round trip and fingerprint checks") {
  const auto dir = test::scratch_dir("ckpt");
  const auto data = tiny_dataset();
  auto m = tiny_model(Task::identity_dependent);
  FitOptions opts;
  opts.checkpoint_dir = dir;
  opts.config_fingerprint = "cfg-a";
  fit(m, data, all_ids(data), {}, tiny_train(), tiny_transform(), opts);
  REQUIRE(fs::exists(dir / "checkpoint_last.pt"));
  REQUIRE(fs::exists(dir / "checkpoint_best.pt"));

  auto fresh = tiny_model(Task::identity_dependent, 99);
  const auto meta = load_checkpoint(dir / "checkpoint_last.pt", fresh, nullptr, "cfg-a");
  CHECK(meta.step == 6);
  CHECK(same_state(m, fresh));

  auto other = tiny_model(Task::identity_dependent, 99);
  CHECK_THROWS_AS(load_checkpoint(dir / "checkpoint_last.pt", other, nullptr, "cfg-b"), CheckpointError);
  auto wrong_task = tiny_model(Task::identity_agnostic);
  CHECK_THROWS_AS(load_checkpoint(dir / "checkpoint_last.pt", wrong_task, nullptr), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "nope.pt", other, nullptr), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("resuming reproduces the uninterrupted run") {
  const auto data = tiny_dataset();
  const auto ids = all_ids(data);
  auto cfg = tiny_train();
  cfg.epochs = 3;
  auto full = tiny_model(Task::identity_agnostic);
  const auto full_log = fit(full, data, ids, {}, cfg, tiny_transform());

  const auto dir = test::scratch_dir("resume");
  auto part = tiny_model(Task::identity_agnostic);
  FitOptions stop;
  stop.checkpoint_dir = dir;
  stop.stop_after_steps = 4;  // mid-epoch
  const auto first = fit(part, data, ids, {}, cfg, tiny_transform(), stop);
  CHECK(first.steps.size() == 4);

  auto resumed = tiny_model(Task::identity_agnostic, 123);
  FitOptions res;
  res.resume_from = dir / "checkpoint_last.pt";
  const auto second = fit(resumed, data, ids, {}, cfg, tiny_transform(), res);
  REQUIRE(second.steps.size() == 5);
  for (const auto& s : second.steps) {
    const auto& ref = full_log.steps[static_cast<std::size_t>(s.step)];
    CHECK(s.lr_projection == ref.lr_projection);
    CHECK(s.lr_body == ref.lr_body);
    CHECK(s.loss == doctest::Approx(ref.loss).epsilon(1e-6));
  }
  CHECK(same_state(full, resumed));
  fs::remove_all(dir);
}

TEST_CASE("validation selects the best epoch") {
  const auto data = tiny_dataset(32);
  auto ids = all_ids(data);
  const std::vector<std::string> val(ids.end() - 8, ids.end());
  ids.resize(ids.size() - 8);
  auto cfg = tiny_train();
  cfg.epochs = 3;
  cfg.model_selection = ModelSelection::best;
  auto m = tiny_model(Task::identity_agnostic);
  const auto log = fit(m, data, ids, val, cfg, tiny_transform());
  REQUIRE(log.best_epoch.has_value());
  double best = 1e9;
  int best_epoch = -1;
  for (const auto& e : log.epochs) {
    REQUIRE(e.validation_metric.has_value());
    if (*e.validation_metric < best) best = *e.validation_metric, best_epoch = e.epoch;
  }
  CHECK(*log.best_epoch == best_epoch);
  // The restored model reproduces the best validation MAE.
  const auto r = evaluate(m, data, val, tiny_transform());
  CHECK(r.scalars.at("mae").value() == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("evaluating a saved checkpoint equals in-process evaluation") {
  const auto dir = test::scratch_dir("evalckpt");
  const auto data = tiny_dataset();
  auto m = tiny_model(Task::identity_dependent);
  FitOptions opts;
  opts.checkpoint_dir = dir;
  fit(m, data, all_ids(data), {}, tiny_train(), tiny_transform(), opts);
  const auto in_process = evaluate(m, data, all_ids(data), tiny_transform());
  auto loaded = tiny_model(Task::identity_dependent, 5);
  load_checkpoint(dir / "checkpoint_best.pt", loaded, nullptr);
  const auto from_disk = evaluate(loaded, data, all_ids(data), tiny_transform());
  const bool same_scalars = in_process.scalars == from_disk.scalars;
  CHECK(same_scalars);
  const bool same_confusion = in_process.confusion == from_disk.confusion;
  CHECK(same_confusion);
  fs::remove_all(dir);
}

TEST_CASE("predict returns embeddings of the backbone width") {
  const auto data = tiny_dataset(10);
  auto m = tiny_model(Task::identity_agnostic);
  const auto p = predict(m, data, all_ids(data), tiny_transform(), 4, true);
  REQUIRE(p.embeddings.size() == 10);
  CHECK(p.embeddings[0].size() == 576);
  CHECK(p.counts.size() == 10);
  for (const auto& c : p.counts)
    for (double v : c) CHECK(v >= 0.0);
}

TEST_CASE("invalid training configs are rejected") {
  auto cfg = tiny_train();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = tiny_train();
  cfg.clip_max_norm = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  const auto data = tiny_dataset(4);
  auto m = tiny_model(Task::identity_agnostic);
  CHECK_THROWS_AS(fit(m, data, {"missing"}, {}, tiny_train(), tiny_transform()), ContractViolation);
}
