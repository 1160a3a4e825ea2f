// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "wicount/error.hpp"
#include "wicount/log.hpp"
#include "wicount/rng.hpp"

namespace wicount {

namespace fs = std::filesystem;

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(cfg.clip_max_norm > 0.0)) throw ConfigError("train.clip_max_norm must be > 0");
  if (!(cfg.lr_projection_peak > 0.0) || !(cfg.lr_backbone_head_peak > 0.0)) {
    throw ConfigError("learning rates must be > 0");
  }
  if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0)) {
    throw ConfigError("train.warmup_fraction must be in [0, 1)");
  }
  if (!(cfg.focal_gamma >= 0.0)) throw ConfigError("train.focal_gamma must be >= 0");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw ConfigError("train.validation_fraction must be in [0, 1)");
  }
}

GroupSchedules GroupSchedules::make(const TrainConfig& cfg, std::int64_t steps_per_epoch) {
  GroupSchedules g;
  g.granularity = cfg.schedule_granularity;
  g.steps_per_epoch = steps_per_epoch;
  const std::int64_t units = cfg.schedule_granularity == ScheduleGranularity::step
                                 ? cfg.epochs * steps_per_epoch
                                 : cfg.epochs;
  g.projection = LrSchedule::make(units, cfg.warmup_fraction, cfg.lr_projection_peak);
  g.body = LrSchedule::make(units, cfg.warmup_fraction, cfg.lr_backbone_head_peak);
  return g;
}

namespace {

std::int64_t schedule_unit(const GroupSchedules& g, std::int64_t step) {
  return g.granularity == ScheduleGranularity::step ? step : step / g.steps_per_epoch;
}

}  // namespace

double GroupSchedules::projection_lr(std::int64_t step) const {
  return lr_at(schedule_unit(*this, step), projection);
}

double GroupSchedules::body_lr(std::int64_t step) const {
  return lr_at(schedule_unit(*this, step), body);
}

std::vector<torch::optim::OptimizerParamGroup> parameter_groups(CsiNet& model,
                                                                const TrainConfig& cfg) {
  auto proj = model->projection_parameters();
  auto body = model->body_parameters();

  std::set<const void*> seen;
  auto claim = [&](const std::vector<torch::Tensor>& ps) {
    for (const auto& p : ps) {
      if (!seen.insert(p.unsafeGetTensorImpl()).second) {
        throw ContractViolation("parameter assigned to more than one optimizer group");
      }
    }
  };
  claim(proj);
  claim(body);
  for (const auto& p : model->parameters()) {
    if (p.requires_grad() && seen.count(p.unsafeGetTensorImpl()) == 0) {
      throw ContractViolation("trainable parameter missing from the optimizer groups");
    }
  }

  auto opts = [&](double lr) {
    auto o = std::make_unique<torch::optim::AdamWOptions>(lr);
    o->weight_decay(cfg.weight_decay);
    return o;
  };
  std::vector<torch::optim::OptimizerParamGroup> groups;
  groups.emplace_back(proj, opts(cfg.lr_projection_peak));
  groups.emplace_back(body, opts(cfg.lr_backbone_head_peak));
  return groups;
}

double global_grad_norm(const std::vector<torch::Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.grad().defined()) continue;
    const double n = p.grad().norm().item<double>();
    sq += n * n;
  }
  return std::sqrt(sq);
}

double clip_global_norm(const std::vector<torch::Tensor>& params, double max_norm) {
  return torch::nn::utils::clip_grad_norm_(params, max_norm);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const fs::path& path, CsiNet& model, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta) {
  torch::serialize::OutputArchive archive;
  archive.write("format", c10::IValue(std::string("wicount-checkpoint-1")));
  archive.write("model_fingerprint", c10::IValue(meta.model_fingerprint));
  archive.write("config_fingerprint", c10::IValue(meta.config_fingerprint));
  archive.write("step", c10::IValue(meta.step));
  torch::serialize::OutputArchive m;
  model->save(m);
  archive.write("model", m);
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive o;
    optimizer->save(o);
    archive.write("optimizer", o);
  }
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  archive.save_to(tmp.string());
  fs::rename(tmp, path);
}

namespace {

std::string read_string(torch::serialize::InputArchive& a, const char* key) {
  c10::IValue v;
  if (!a.try_read(key, v) || !v.isString()) {
    throw CheckpointError(std::string("checkpoint lacks '") + key + "'");
  }
  return v.toStringRef();
}

}  // namespace

CheckpointMeta load_checkpoint(const fs::path& path, CsiNet& model,
                               torch::optim::Optimizer* optimizer,
                               const std::string& expected_config_fingerprint) {
  if (!fs::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  if (read_string(archive, "format") != "wicount-checkpoint-1") {
    throw CheckpointError("unknown checkpoint format in " + path.string());
  }
  CheckpointMeta meta;
  meta.model_fingerprint = read_string(archive, "model_fingerprint");
  meta.config_fingerprint = read_string(archive, "config_fingerprint");
  c10::IValue step;
  if (!archive.try_read("step", step) || !step.isInt()) {
    throw CheckpointError("checkpoint lacks 'step'");
  }
  meta.step = step.toInt();

  if (meta.model_fingerprint != model->spec().fingerprint()) {
    throw CheckpointError("checkpoint " + path.string() + " was written for model '" +
                          meta.model_fingerprint + "', expected '" + model->spec().fingerprint() +
                          "'");
  }
  if (!expected_config_fingerprint.empty() &&
      meta.config_fingerprint != expected_config_fingerprint) {
    throw CheckpointError("checkpoint " + path.string() + " has config fingerprint " +
                          meta.config_fingerprint + ", expected " + expected_config_fingerprint);
  }
  try {
    torch::serialize::InputArchive m;
    archive.read("model", m);
    model->load(m);
    if (optimizer != nullptr) {
      torch::serialize::InputArchive o;
      archive.read("optimizer", o);
      optimizer->load(o);
    }
  } catch (const c10::Error& e) {
    throw CheckpointError("checkpoint " + path.string() + " does not match the model: " +
                          e.what_without_backtrace());
  }
  return meta;
}

// ---------------------------------------------------------------------------
// Tensors

namespace {

torch::Tensor stack_images(const std::vector<const Matrix*>& images) {
  const auto r = static_cast<std::int64_t>(images.front()->rows);
  const auto c = static_cast<std::int64_t>(images.front()->cols);
  auto out = torch::empty({static_cast<std::int64_t>(images.size()), 1, r, c});
  float* dst = out.data_ptr<float>();
  for (const Matrix* m : images) {
    dst = std::copy(m->data.begin(), m->data.end(), dst);
  }
  return out;
}

std::string cache_key(const std::string& id, const TransformConfig& t) {
  return id + "|" + std::to_string(t.resolution) + "|" + std::to_string(t.target_length);
}

const Matrix& cached_image(const Dataset& data, const std::string& id, const TransformConfig& t,
                           ImageCache* cache, Matrix& scratch) {
  if (cache != nullptr) {
    const auto key = cache_key(id, t);
    auto it = cache->find(key);
    if (it == cache->end()) it = cache->emplace(key, preprocess(data.sample(id), t)).first;
    return it->second;
  }
  scratch = preprocess(data.sample(id), t);
  return scratch;
}

}  // namespace

torch::Tensor eval_images(const Dataset& data, const std::vector<std::string>& ids,
                          const TransformConfig& tcfg, ImageCache* cache) {
  if (ids.empty()) throw ContractViolation("no samples to transform");
  std::vector<Matrix> owned(ids.size());
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ptrs.push_back(&cached_image(data, ids[i], tcfg, cache, owned[i]));
  }
  return stack_images(ptrs);
}

torch::Tensor targets_tensor(Task task, const std::vector<SlotLabels>& labels) {
  const auto n = static_cast<std::int64_t>(labels.size());
  if (task == Task::identity_dependent) {
    auto t = torch::zeros({n, kUserSlots, kClasses});
    auto acc = t.accessor<float, 3>();
    for (std::int64_t i = 0; i < n; ++i) {
      const auto oh = encode_identity_dependent(labels[static_cast<std::size_t>(i)]);
      for (std::size_t u = 0; u < kUserSlots; ++u) {
        for (std::size_t k = 0; k < kClasses; ++k) acc[i][u][k] = oh[u][k];
      }
    }
    return t;
  }
  auto t = torch::zeros({n, kActivities});
  auto acc = t.accessor<float, 2>();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto c = derive_counts(labels[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < kActivities; ++k) acc[i][k] = static_cast<float>(c[k]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Inference

Predictions predict(CsiNet& model, const Dataset& data, const std::vector<std::string>& ids,
                    const TransformConfig& tcfg, int batch_size, bool with_embeddings,
                    ImageCache* cache) {
  if (batch_size < 1) throw ContractViolation("batch_size must be >= 1");
  Predictions out;
  const bool was_training = model->is_training();
  model->eval();
  torch::NoGradGuard no_grad;
  const Task task = model->spec().task;

  for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(ids.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<std::string> chunk(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                   ids.begin() + static_cast<std::ptrdiff_t>(end));
    auto x = eval_images(data, chunk, tcfg, cache);
    auto z = model->features(x);
    auto y = model->head_forward(z).contiguous();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto idx = static_cast<std::int64_t>(i);
      out.truths.push_back(data.manifest().find(chunk[i]).labels);
      if (task == Task::identity_dependent) {
        auto cls = y[idx].argmax(-1).to(torch::kInt32).contiguous();
        std::array<int, kUserSlots> c{};
        std::copy_n(cls.data_ptr<int>(), kUserSlots, c.begin());
        out.slots.push_back(labels_from_classes(c));
      } else {
        auto row = y[idx].to(torch::kFloat64).contiguous();
        CountPrediction p{};
        std::copy_n(row.data_ptr<double>(), kActivities, p.begin());
        out.counts.push_back(p);
      }
      if (with_embeddings) {
        auto zr = z[idx].contiguous();
        out.embeddings.emplace_back(zr.data_ptr<float>(), zr.data_ptr<float>() + zr.numel());
      }
    }
  }
  if (was_training) model->train();
  return out;
}

MetricReport report_from_predictions(Task task, const Predictions& p, const EvalOptions& opts) {
  if (task == Task::identity_dependent) {
    return make_report(p.slots, p.truths, opts.macro_include_absent);
  }
  std::vector<CountVector> truths;
  truths.reserve(p.truths.size());
  for (const auto& t : p.truths) truths.push_back(derive_counts(t));
  return make_report(p.counts, truths, p.truths, opts.r2_mode);
}

MetricReport evaluate(CsiNet& model, const Dataset& data, const std::vector<std::string>& ids,
                      const TransformConfig& tcfg, const EvalOptions& opts, ImageCache* cache) {
  auto p = predict(model, data, ids, tcfg, 32, false, cache);
  return report_from_predictions(model->spec().task, p, opts);
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct StateCopy {
  std::vector<torch::Tensor> tensors;
};

StateCopy snapshot(CsiNet& model) {
  StateCopy s;
  torch::NoGradGuard g;
  for (const auto& p : model->parameters()) s.tensors.push_back(p.detach().clone());
  for (const auto& b : model->buffers()) s.tensors.push_back(b.detach().clone());
  return s;
}

void restore(CsiNet& model, const StateCopy& s) {
  torch::NoGradGuard g;
  std::size_t i = 0;
  for (auto& p : model->parameters()) p.copy_(s.tensors[i++]);
  for (auto& b : model->buffers()) b.copy_(s.tensors[i++]);
}

/// Higher is better for macro-F1, lower for MAE; returns a value to maximise.
double selection_score(Task task, double metric) {
  return task == Task::identity_dependent ? metric : -metric;
}

double validation_metric(CsiNet& model, const Dataset& data, const std::vector<std::string>& ids,
                         const TransformConfig& tcfg, ImageCache* cache) {
  auto report = evaluate(model, data, ids, tcfg, {}, cache);
  const char* key = model->spec().task == Task::identity_dependent ? "macro_f1" : "mae";
  return report.scalars.at(key).value_or(0.0);
}

}  // namespace

TrainingLog fit(CsiNet& model, const Dataset& data, const std::vector<std::string>& train_ids,
                const std::vector<std::string>& validation_ids, const TrainConfig& cfg,
                const TransformConfig& tcfg, const FitOptions& opts) {
  validate(cfg);
  validate(tcfg);
  if (train_ids.empty()) throw ContractViolation("no training samples");

  const Task task = model->spec().task;
  const auto n = static_cast<std::int64_t>(train_ids.size());
  const std::int64_t spe = (n + cfg.batch_size - 1) / cfg.batch_size;

  TrainingLog log;
  log.steps_per_epoch = spe;
  log.total_steps = spe * cfg.epochs;

  const auto schedules = GroupSchedules::make(cfg, spe);
  torch::optim::AdamW optimizer(parameter_groups(model, cfg),
                                torch::optim::AdamWOptions(cfg.lr_backbone_head_peak)
                                    .weight_decay(cfg.weight_decay));
  std::vector<torch::Tensor> trainable;
  for (const auto& p : model->parameters()) {
    if (p.requires_grad()) trainable.push_back(p);
  }

  std::int64_t step = 0;
  if (!opts.resume_from.empty()) {
    const auto meta = load_checkpoint(opts.resume_from, model, &optimizer, opts.config_fingerprint);
    step = meta.step;
    if (step > log.total_steps) {
      throw CheckpointError("checkpoint step " + std::to_string(step) +
                            " exceeds the planned " + std::to_string(log.total_steps));
    }
    log_info("resuming from step " + std::to_string(step));
  }

  std::vector<SlotLabels> labels;
  labels.reserve(train_ids.size());
  for (const auto& id : train_ids) {
    if (!data.manifest().contains(id)) throw ContractViolation("unknown training id " + id);
    labels.push_back(data.manifest().find(id).labels);
  }

  const bool deterministic_images = !tcfg.warp_enabled;
  const bool use_validation = !validation_ids.empty();
  std::optional<double> best_score;
  std::optional<StateCopy> best_state;
  const fs::path last_path = opts.checkpoint_dir.empty() ? fs::path{} : opts.checkpoint_dir / "checkpoint_last.pt";
  const fs::path best_path = opts.checkpoint_dir.empty() ? fs::path{} : opts.checkpoint_dir / "checkpoint_best.pt";
  const std::string model_fp = model->spec().fingerprint();

  auto save_last = [&] {
    if (!last_path.empty()) {
      save_checkpoint(last_path, model, &optimizer, {model_fp, opts.config_fingerprint, step});
    }
  };

  model->train();
  bool stopped = false;
  while (step < log.total_steps && !stopped) {
    const auto epoch = static_cast<int>(step / spe);
    std::vector<std::size_t> order(train_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng(mix_seed(cfg.seed, 0x0D0E0000ULL + static_cast<std::uint64_t>(epoch)));
    order_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::int64_t loss_steps = 0;
    std::int64_t zero_outputs = 0;
    std::int64_t total_outputs = 0;

    for (std::int64_t b = step % spe; b < spe; ++b) {
      if (opts.stop_after_steps && step >= *opts.stop_after_steps) {
        stopped = true;
        break;
      }
      const auto begin = static_cast<std::size_t>(b * cfg.batch_size);
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));

      std::vector<Matrix> owned(end - begin);
      std::vector<const Matrix*> imgs;
      std::vector<SlotLabels> batch_labels;
      for (std::size_t j = begin; j < end; ++j) {
        const auto idx = order[j];
        if (deterministic_images) {
          imgs.push_back(&cached_image(data, train_ids[idx], tcfg, opts.cache, owned[j - begin]));
        } else {
          Rng aug(mix_seed(mix_seed(cfg.seed, 0xA0000000ULL + static_cast<std::uint64_t>(epoch)), j));
          owned[j - begin] = preprocess(data.sample(train_ids[idx]), tcfg, &aug);
          imgs.push_back(&owned[j - begin]);
        }
        batch_labels.push_back(labels[idx]);
      }
      auto x = stack_images(imgs);
      auto y = targets_tensor(task, batch_labels);

      const double lr_p = schedules.projection_lr(step);
      const double lr_b = schedules.body_lr(step);
      auto& groups = optimizer.param_groups();
      static_cast<torch::optim::AdamWOptions&>(groups[0].options()).lr(lr_p);
      static_cast<torch::optim::AdamWOptions&>(groups[1].options()).lr(lr_b);

      torch::manual_seed(mix_seed(cfg.seed, 0x50000000ULL + static_cast<std::uint64_t>(step)));
      optimizer.zero_grad();
      auto out = model->forward(x);
      auto loss = task == Task::identity_dependent ? focal_loss(out, y, cfg.focal_gamma)
                                                   : count_loss(out, y);
      const double loss_value = loss.item<double>();
      if (!std::isfinite(loss_value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " step " << step << " (batch of "
            << imgs.size() << ", first id " << train_ids[order[begin]] << ")";
        throw NumericError(msg.str());
      }
      loss.backward();
      const double pre = clip_global_norm(trainable, cfg.clip_max_norm);
      const double post = global_grad_norm(trainable);
      if (!std::isfinite(pre)) {
        throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step));
      }
      optimizer.step();

      if (task == Task::identity_agnostic) {
        zero_outputs += (out.detach() == 0).sum().item<std::int64_t>();
        total_outputs += out.numel();
      }
      log.steps.push_back({step, loss_value, lr_p, lr_b, pre, post});
      loss_sum += loss_value;
      ++loss_steps;
      ++step;
    }

    if (stopped && loss_steps == 0) break;
    const bool epoch_complete = step % spe == 0;
    if (!epoch_complete) break;  // stopped mid-epoch

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_steps > 0 ? loss_sum / static_cast<double>(loss_steps) : 0.0;
    rec.zero_output_fraction =
        total_outputs > 0 ? static_cast<double>(zero_outputs) / static_cast<double>(total_outputs) : 0.0;
    if (use_validation) {
      rec.validation_metric = validation_metric(model, data, validation_ids, tcfg, opts.cache);
      model->train();
      const double score = selection_score(task, *rec.validation_metric);
      if (!best_score || score > *best_score) {
        best_score = score;
        log.best_epoch = epoch;
        if (cfg.model_selection == ModelSelection::best) best_state = snapshot(model);
        if (!best_path.empty()) {
          save_checkpoint(best_path, model, nullptr, {model_fp, opts.config_fingerprint, step});
        }
      }
    }
    std::ostringstream msg;
    msg << "epoch " << epoch << " loss " << rec.train_loss;
    if (rec.validation_metric) msg << " val " << *rec.validation_metric;
    if (task == Task::identity_agnostic) msg << " zero-out " << rec.zero_output_fraction;
    log_info(msg.str());
    if (rec.zero_output_fraction > 0.9) {
      log_warn("most counting outputs are clamped at zero (dead ReLU)");
    }
    log.epochs.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);
    save_last();
  }
  save_last();

  if (!stopped && step == log.total_steps) {
    if (best_state && cfg.model_selection == ModelSelection::best) {
      restore(model, *best_state);
    }
    if (!best_path.empty() && !use_validation) {
      save_checkpoint(best_path, model, nullptr, {model_fp, opts.config_fingerprint, step});
    }
  }
  model->eval();
  return log;
}

}  // namespace wicount
