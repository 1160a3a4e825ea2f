// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "wicount/error.hpp"
#include "wicount/rng.hpp"

namespace wicount {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Walks one JSON object, tracking which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Reader() = default;

  const json& at(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError("missing required key " + where(key));
    used_.insert(key);
    return *it;
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("wrong type for " + where(key) + ": " + v.dump());
    }
  }

  std::uint64_t get_u64(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::size_t get_size(const std::string& key) { return static_cast<std::size_t>(get_u64(key)); }

  Reader child(const std::string& key) { return Reader(at(key), where(key)); }

  template <typename E, typename Parse>
  E get_enum(const std::string& key, Parse parse) {
    const auto s = get<std::string>(key);
    auto e = parse(s);
    if (!e) throw ConfigError("invalid value '" + s + "' for " + where(key));
    return *e;
  }

  /// Throws if the object holds keys nobody asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (used_.count(it.key()) == 0) throw ConfigError("unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::optional<UserAssignment> parse_assignment(std::string_view s) {
  if (s == "first_slots") return UserAssignment::first_slots;
  if (s == "random_users") return UserAssignment::random_users;
  return std::nullopt;
}
std::string_view to_string(UserAssignment a) {
  return a == UserAssignment::first_slots ? "first_slots" : "random_users";
}
std::optional<ChannelLayout> parse_layout(std::string_view s) {
  if (s == "scattered") return ChannelLayout::scattered;
  if (s == "user_blocks") return ChannelLayout::user_blocks;
  if (s == "activity_blocks") return ChannelLayout::activity_blocks;
  return std::nullopt;
}
std::string_view to_string(ChannelLayout l) {
  switch (l) {
    case ChannelLayout::scattered: return "scattered";
    case ChannelLayout::user_blocks: return "user_blocks";
    case ChannelLayout::activity_blocks: return "activity_blocks";
  }
  return "?";
}
std::optional<Interpolation> parse_interp(std::string_view s) {
  if (s == "bicubic") return Interpolation::bicubic;
  if (s == "bilinear") return Interpolation::bilinear;
  return std::nullopt;
}
std::optional<R2Mode> parse_r2(std::string_view s) {
  if (s == "flattened") return R2Mode::flattened;
  if (s == "per_class_mean") return R2Mode::per_class_mean;
  return std::nullopt;
}
std::optional<ScheduleGranularity> parse_granularity(std::string_view s) {
  if (s == "step") return ScheduleGranularity::step;
  if (s == "epoch") return ScheduleGranularity::epoch;
  return std::nullopt;
}
std::optional<ModelSelection> parse_selection(std::string_view s) {
  if (s == "best") return ModelSelection::best;
  if (s == "last") return ModelSelection::last;
  return std::nullopt;
}
std::optional<DataSource> parse_source(std::string_view s) {
  if (s == "directory") return DataSource::directory;
  if (s == "synthetic") return DataSource::synthetic;
  return std::nullopt;
}
std::optional<InvarianceSamples> parse_inv(std::string_view s) {
  if (s == "test") return InvarianceSamples::test;
  if (s == "all") return InvarianceSamples::all;
  return std::nullopt;
}

SyntheticSpec synthetic_from(Reader r) {
  SyntheticSpec s;
  s.n_samples = r.get_size("n_samples");
  s.t_length = r.get_size("t_length");
  s.user_count_min = r.get<int>("user_count_min");
  s.user_count_max = r.get<int>("user_count_max");
  const auto freqs = r.get<std::vector<double>>("signature_frequencies");
  if (freqs.size() != kActivities) {
    throw ConfigError(r.where("signature_frequencies") + " needs 9 entries");
  }
  std::copy(freqs.begin(), freqs.end(), s.signature_frequencies.begin());
  s.noise_std = r.get<double>("noise_std");
  s.seed = r.get_u64("seed");
  s.user_assignment = r.get_enum<UserAssignment>("user_assignment", parse_assignment);
  s.channel_layout = r.get_enum<ChannelLayout>("channel_layout", parse_layout);
  s.user_signature_strength = r.get<double>("user_signature_strength");
  s.channels_per_activity = r.get_size("channels_per_activity");
  s.activity_amplitude = r.get<double>("activity_amplitude");
  s.baseline_level = r.get<double>("baseline_level");
  s.duration_seconds = r.get<double>("duration_seconds");
  r.finish();
  return s;
}

json synthetic_to(const SyntheticSpec& s) {
  return {{"n_samples", s.n_samples},
          {"t_length", s.t_length},
          {"user_count_min", s.user_count_min},
          {"user_count_max", s.user_count_max},
          {"signature_frequencies", std::vector<double>(s.signature_frequencies.begin(),
                                                        s.signature_frequencies.end())},
          {"noise_std", s.noise_std},
          {"seed", s.seed},
          {"user_assignment", to_string(s.user_assignment)},
          {"channel_layout", to_string(s.channel_layout)},
          {"user_signature_strength", s.user_signature_strength},
          {"channels_per_activity", s.channels_per_activity},
          {"activity_amplitude", s.activity_amplitude},
          {"baseline_level", s.baseline_level},
          {"duration_seconds", s.duration_seconds}};
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  c.label = root.get<std::string>("label");

  {
    Reader d = root.child("dataset");
    c.dataset.source = d.get_enum<DataSource>("source", parse_source);
    c.dataset.root = d.get<std::string>("root");
    const auto band = d.get<std::string>("band");
    if (band != "all") {
      c.dataset.band = parse_band(band);
      if (!c.dataset.band) throw ConfigError("invalid dataset.band '" + band + "'");
    }
    const auto env = d.get<std::string>("environment");
    if (env != "all") {
      c.dataset.environment = parse_environment(env);
      if (!c.dataset.environment) throw ConfigError("invalid dataset.environment '" + env + "'");
    }
    c.dataset.synthetic = synthetic_from(d.child("synthetic"));
    // Synthetic samples carry the configured band so filtering stays meaningful.
    c.dataset.synthetic.band = c.dataset.band.value_or(Band::ghz5);
    d.finish();
  }

  c.task = root.get_enum<Task>("task", parse_task);

  {
    Reader m = root.child("model");
    c.model.task = c.task;
    c.model.backbone = m.get_enum<BackboneKind>("backbone", parse_backbone);
    c.model.pretrained = m.get<bool>("pretrained");
    c.model.weights_path = m.get<std::string>("weights_path");
    c.model.channel_strategy = m.get_enum<ChannelStrategy>("channel_strategy", parse_channel_strategy);
    c.model.init_seed = m.get_u64("init_seed");
    if (const json& bm = m.at("batchnorm_momentum"); !bm.is_null()) {
      if (!bm.is_number() || !(bm.get<double>() > 0.0 && bm.get<double>() <= 1.0)) {
        throw ConfigError("model.batchnorm_momentum must be null or in (0, 1]");
      }
      c.model.batchnorm_momentum = bm.get<double>();
    }
    m.finish();
  }
  {
    Reader t = root.child("transform");
    c.transform.target_length = t.get_size("target_length");
    c.transform.resolution = t.get_size("resolution");
    c.transform.interpolation = t.get_enum<Interpolation>("interpolation", parse_interp);
    c.transform.warp_enabled = t.get<bool>("warp_enabled");
    c.transform.warp_probability = t.get<double>("warp_probability");
    c.transform.warp_scale_min = t.get<double>("warp_scale_min");
    c.transform.warp_scale_max = t.get<double>("warp_scale_max");
    c.transform.standardize = t.get<bool>("standardize");
    t.finish();
  }
  {
    Reader t = root.child("train");
    c.train.epochs = t.get<int>("epochs");
    c.train.batch_size = t.get<int>("batch_size");
    c.train.weight_decay = t.get<double>("weight_decay");
    c.train.clip_max_norm = t.get<double>("clip_max_norm");
    c.train.lr_projection_peak = t.get<double>("lr_projection_peak");
    c.train.lr_backbone_head_peak = t.get<double>("lr_backbone_head_peak");
    c.train.warmup_fraction = t.get<double>("warmup_fraction");
    c.train.schedule_granularity =
        t.get_enum<ScheduleGranularity>("schedule_granularity", parse_granularity);
    c.train.focal_gamma = t.get<double>("focal_gamma");
    c.train.seed = t.get_u64("seed");
    c.train.validation_fraction = t.get<double>("validation_fraction");
    c.train.model_selection = t.get_enum<ModelSelection>("model_selection", parse_selection);
    t.finish();
  }
  {
    Reader p = root.child("protocol");
    c.protocol.kind = p.get_enum<Protocol>("kind", parse_protocol);
    c.protocol.seeds = p.get<std::vector<std::uint64_t>>("seeds");
    c.protocol.train_ratio = p.get<double>("train_ratio");
    p.finish();
  }
  {
    Reader e = root.child("evaluation");
    c.evaluation.macro_include_absent = e.get<bool>("macro_include_absent");
    c.evaluation.r2_mode = e.get_enum<R2Mode>("r2_mode", parse_r2);
    c.evaluation.invariance_samples = e.get_enum<InvarianceSamples>("invariance_samples", parse_inv);
    e.finish();
  }
  c.output_dir = root.get<std::string>("output_dir");
  {
    Reader r = root.child("runtime");
    c.runtime.threads = r.get<int>("threads");
    c.runtime.cache_eval_images = r.get<bool>("cache_eval_images");
    r.finish();
  }
  root.finish();

  validate(c.transform);
  validate(c.train);
  if (c.dataset.source == DataSource::synthetic) validate(c.dataset.synthetic);
  if (c.protocol.kind == Protocol::standard && c.protocol.seeds.empty()) {
    throw ConfigError("protocol.seeds must not be empty for the standard protocol");
  }
  if (!(c.protocol.train_ratio > 0.0 && c.protocol.train_ratio < 1.0)) {
    throw ConfigError("protocol.train_ratio must be in (0, 1)");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (c.runtime.threads < 0) throw ConfigError("runtime.threads must be >= 0");
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {
      {"label", c.label},
      {"dataset",
       {{"source", c.dataset.source == DataSource::directory ? "directory" : "synthetic"},
        {"root", c.dataset.root},
        {"band", c.dataset.band ? std::string(to_string(*c.dataset.band)) : "all"},
        {"environment",
         c.dataset.environment ? std::string(to_string(*c.dataset.environment)) : "all"},
        {"synthetic", synthetic_to(c.dataset.synthetic)}}},
      {"task", to_string(c.task)},
      {"model",
       {{"backbone", to_string(c.model.backbone)},
        {"pretrained", c.model.pretrained},
        {"weights_path", c.model.weights_path.string()},
        {"channel_strategy", to_string(c.model.channel_strategy)},
        {"init_seed", c.model.init_seed},
        {"batchnorm_momentum",
         c.model.batchnorm_momentum ? json(*c.model.batchnorm_momentum) : json(nullptr)}}},
      {"transform",
       {{"target_length", c.transform.target_length},
        {"resolution", c.transform.resolution},
        {"interpolation",
         c.transform.interpolation == Interpolation::bicubic ? "bicubic" : "bilinear"},
        {"warp_enabled", c.transform.warp_enabled},
        {"warp_probability", c.transform.warp_probability},
        {"warp_scale_min", c.transform.warp_scale_min},
        {"warp_scale_max", c.transform.warp_scale_max},
        {"standardize", c.transform.standardize}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"weight_decay", c.train.weight_decay},
        {"clip_max_norm", c.train.clip_max_norm},
        {"lr_projection_peak", c.train.lr_projection_peak},
        {"lr_backbone_head_peak", c.train.lr_backbone_head_peak},
        {"warmup_fraction", c.train.warmup_fraction},
        {"schedule_granularity",
         c.train.schedule_granularity == ScheduleGranularity::step ? "step" : "epoch"},
        {"focal_gamma", c.train.focal_gamma},
        {"seed", c.train.seed},
        {"validation_fraction", c.train.validation_fraction},
        {"model_selection", c.train.model_selection == ModelSelection::best ? "best" : "last"}}},
      {"protocol",
       {{"kind", to_string(c.protocol.kind)},
        {"seeds", c.protocol.seeds},
        {"train_ratio", c.protocol.train_ratio}}},
      {"evaluation",
       {{"macro_include_absent", c.evaluation.macro_include_absent},
        {"r2_mode", c.evaluation.r2_mode == R2Mode::flattened ? "flattened" : "per_class_mean"},
        {"invariance_samples",
         c.evaluation.invariance_samples == InvarianceSamples::test ? "test" : "all"}}},
      {"output_dir", c.output_dir.string()},
      {"runtime",
       {{"threads", c.runtime.threads}, {"cache_eval_images", c.runtime.cache_eval_images}}},
  };
}

std::string ExperimentConfig::fingerprint() const {
  json j = to_json(*this);
  j.erase("label");
  j.erase("output_dir");
  j.erase("runtime");
  return hex16(fnv1a(j.dump()));
}

std::string ExperimentConfig::group_fingerprint() const {
  json j = to_json(*this);
  j.erase("label");
  j.erase("output_dir");
  j.erase("runtime");
  j["protocol"].erase("seeds");
  j["train"].erase("seed");
  return hex16(fnv1a(j.dump()));
}

json apply_overrides(json j, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(part)) {
        throw ConfigError("override names unknown key '" + key + "'");
      }
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    json value = json::parse(raw, nullptr, false);
    // String keys take the text as written, so band=2.4 stays "2.4".
    if (value.is_discarded() || (node->is_string() && !value.is_string())) value = raw;
    *node = value;
  }
  return j;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return config_from_json(apply_overrides(std::move(j), overrides));
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  return synthetic_from(Reader(j, "synthetic"));
}

json to_json(const SyntheticSpec& s) { return synthetic_to(s); }

fs::path resolve_data_root(const DatasetConfig& d) {
  if (!d.root.empty()) return d.root;
  if (const char* env = std::getenv("WICOUNT_DATA_ROOT"); env != nullptr && *env != '\0') {
    return env;
  }
  throw ConfigError("dataset.root is empty and WICOUNT_DATA_ROOT is not set");
}

}  // namespace wicount
