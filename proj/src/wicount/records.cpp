// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/records.hpp"

#include <fstream>

#include "wicount/error.hpp"

namespace wicount {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const MetricReport& r) {
  json scalars = json::object();
  for (const auto& [k, v] : r.scalars) scalars[k] = optional_number(v);
  json groups = json::object();
  for (const auto& [count, g] : r.per_user_count) {
    groups[std::to_string(count)] = {
        {"samples", g.samples}, {"metric", g.metric}, {"mean", g.mean}, {"sd", g.sd}};
  }
  json j = {{"task", to_string(r.task)},
            {"split", r.split_descriptor},
            {"samples", r.samples},
            {"scalars", scalars},
            {"per_user_count", groups}};
  if (r.per_activity_mae) {
    json pa = json::object();
    for (std::size_t k = 0; k < kActivities; ++k) {
      pa[std::string(to_string(static_cast<Activity>(k)))] = (*r.per_activity_mae)[k];
    }
    j["per_activity_mae"] = pa;
  }
  if (r.confusion) j["confusion"] = *r.confusion;
  return j;
}

MetricReport metric_report_from_json(const json& j) {
  MetricReport r;
  try {
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw ContractViolation("unknown task in metric record");
    r.task = *task;
    r.split_descriptor = j.at("split").get<std::string>();
    r.samples = j.at("samples").get<std::size_t>();
    for (auto it = j.at("scalars").begin(); it != j.at("scalars").end(); ++it) {
      r.scalars[it.key()] =
          it.value().is_null() ? std::nullopt : std::optional<double>(it.value().get<double>());
    }
    for (auto it = j.at("per_user_count").begin(); it != j.at("per_user_count").end(); ++it) {
      GroupStat g;
      g.samples = it.value().at("samples").get<std::size_t>();
      g.metric = it.value().at("metric").get<double>();
      g.mean = it.value().at("mean").get<double>();
      g.sd = it.value().at("sd").get<double>();
      r.per_user_count[std::stoul(it.key())] = g;
    }
    if (j.contains("per_activity_mae")) {
      std::array<double, kActivities> pa{};
      for (std::size_t k = 0; k < kActivities; ++k) {
        pa[k] = j["per_activity_mae"].at(std::string(to_string(static_cast<Activity>(k)))).get<double>();
      }
      r.per_activity_mae = pa;
    }
    if (j.contains("confusion")) r.confusion = j["confusion"].get<ConfusionMatrix>();
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed metric record: ") + e.what());
  }
  return r;
}

json to_json(const InvarianceReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"user_a", p.user_a}, {"user_b", p.user_b}, {"euclidean", p.euclidean},
                     {"cosine", p.cosine}});
  }
  return {{"users", r.users},
          {"excluded_users", r.excluded_users},
          {"samples_per_user", r.samples_per_user},
          {"pairs", pairs},
          {"euclidean_mean", r.euclidean_mean},
          {"euclidean_sd", r.euclidean_sd},
          {"cosine_mean", r.cosine_mean},
          {"cosine_sd", r.cosine_sd}};
}

json to_json(const TrainingLog& log) {
  json steps = json::array();
  for (const auto& s : log.steps) {
    steps.push_back({{"step", s.step},
                     {"loss", s.loss},
                     {"lr_projection", s.lr_projection},
                     {"lr_body", s.lr_body},
                     {"grad_norm", s.grad_norm},
                     {"clipped_norm", s.clipped_norm}});
  }
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_metric", optional_number(e.validation_metric)},
                      {"zero_output_fraction", e.zero_output_fraction}});
  }
  return {{"total_steps", log.total_steps},
          {"steps_per_epoch", log.steps_per_epoch},
          {"best_epoch", log.best_epoch ? json(*log.best_epoch) : json(nullptr)},
          {"epochs", epochs},
          {"steps", steps}};
}

json to_json(const DatasetSummary& s) {
  json users = json::object();
  for (const auto& [k, v] : s.by_user_count) users[std::to_string(k)] = v;
  return {{"total", s.total},
          {"by_environment", s.by_environment},
          {"by_band", s.by_band},
          {"by_user_count", users}};
}

json to_json(const std::map<std::string, MeanSd>& agg) {
  json j = json::object();
  for (const auto& [k, v] : agg) j[k] = {{"mean", v.mean}, {"sd", v.sd}, {"n", v.n}};
  return j;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError(path.string() + " is not valid JSON");
  return j;
}

void write_json(const fs::path& path, const json& j) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace wicount
