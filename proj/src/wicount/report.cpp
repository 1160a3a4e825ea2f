// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "wicount/error.hpp"
#include "wicount/metrics.hpp"
#include "wicount/records.hpp"

namespace wicount {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Runs pooled into one table entry.
struct Group {
  std::string fingerprint;
  std::string label;
  std::string task;
  std::string protocol;
  std::string band;
  std::string environment;
  std::string backbone;
  std::vector<MetricReport> reports;
  std::vector<json> invariance;  // per-split invariance records
};

/// Latest file named base.json / base-N.json in `dir`.
std::optional<fs::path> latest_numbered(const fs::path& dir, const std::string& base) {
  std::optional<fs::path> best;
  int best_n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    int n = 0;
    if (name == base + ".json") {
      n = 1;
    } else if (name.rfind(base + "-", 0) == 0 && name.size() > base.size() + 6 &&
               name.substr(name.size() - 5) == ".json") {
      try {
        n = std::stoi(name.substr(base.size() + 1, name.size() - base.size() - 6));
      } catch (const std::exception&) {
        continue;
      }
    } else {
      continue;
    }
    if (n > best_n) {
      best_n = n;
      best = e.path();
    }
  }
  return best;
}

std::vector<Group> load_groups(const std::vector<fs::path>& run_dirs) {
  std::map<std::string, Group> by_slot;  // slot key -> group
  for (const auto& dir : run_dirs) {
    const json rec = read_json(dir / "run_record.json");
    if (rec.value("format", "") != "wicount-run-1") {
      throw IoError(dir.string() + " does not hold a run record");
    }
    if (!rec.value("complete", false)) throw IoError("run " + dir.string() + " is incomplete");
    const json& cfg = rec.at("config");

    Group g;
    g.fingerprint = rec.at("group_fingerprint").get<std::string>();
    g.label = rec.at("label").get<std::string>();
    g.task = rec.at("task").get<std::string>();
    g.protocol = rec.at("protocol").get<std::string>();
    g.band = cfg.at("dataset").at("band").get<std::string>();
    g.environment = cfg.at("dataset").at("environment").get<std::string>();
    g.backbone = cfg.at("model").at("backbone").get<std::string>();

    std::vector<MetricReport> reports;
    if (auto ev = latest_numbered(dir, "evaluation")) {
      const json e = read_json(*ev);
      if (e.at("config_fingerprint") != rec.at("config_fingerprint")) {
        throw ConfigError("evaluation in " + dir.string() + " belongs to another config");
      }
      for (const auto& s : e.at("splits")) reports.push_back(metric_report_from_json(s));
    } else {
      for (const auto& s : rec.at("splits")) reports.push_back(metric_report_from_json(s.at("metrics")));
    }
    std::vector<json> inv;
    if (auto iv = latest_numbered(dir, "invariance")) {
      const json e = read_json(*iv);
      if (e.at("config_fingerprint") != rec.at("config_fingerprint")) {
        throw ConfigError("invariance record in " + dir.string() + " belongs to another config");
      }
      for (const auto& s : e.at("splits")) inv.push_back(s);
    }

    const std::string slot =
        g.label + "\x1f" + g.task + "\x1f" + g.protocol + "\x1f" + g.band + "\x1f" + g.environment;
    auto it = by_slot.find(slot);
    if (it == by_slot.end()) {
      g.reports = std::move(reports);
      g.invariance = std::move(inv);
      by_slot.emplace(slot, std::move(g));
    } else {
      if (it->second.fingerprint != g.fingerprint) {
        throw ConfigError("refusing to pool runs labelled '" + g.label + "' (" + g.task + ", " +
                          g.protocol + "): config fingerprints " + it->second.fingerprint +
                          " and " + g.fingerprint + " differ");
      }
      auto& dst = it->second;
      dst.reports.insert(dst.reports.end(), reports.begin(), reports.end());
      dst.invariance.insert(dst.invariance.end(), inv.begin(), inv.end());
    }
  }
  std::vector<Group> out;
  for (auto& [k, g] : by_slot) out.push_back(std::move(g));
  return out;
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Display scale and precision per metric.
struct Column {
  std::string key;
  std::string title;
  double scale;
  int decimals;
};

const std::vector<Column>& dependent_columns() {
  static const std::vector<Column> c = {{"accuracy", "Acc. (%)", 100, 2},
                                        {"macro_precision", "Prec. (%)", 100, 2},
                                        {"macro_recall", "Rec. (%)", 100, 2},
                                        {"macro_f1", "F1 (%)", 100, 2}};
  return c;
}
const std::vector<Column>& counting_columns() {
  static const std::vector<Column> c = {{"cell_accuracy", "Cell Acc. (%)", 100, 2},
                                        {"exact_match", "Exact Match (%)", 100, 2},
                                        {"mae", "MAE", 1, 4},
                                        {"r2", "R² (%)", 100, 2}};
  return c;
}

std::string mean_sd_cell(const Group* g, const Column& c) {
  if (g == nullptr) return "–";
  const auto agg = aggregate(g->reports);
  auto it = agg.find(c.key);
  if (it == agg.end() || it->second.n == 0) return "n/a";
  return fmt(it->second.mean * c.scale, c.decimals) + " ± " + fmt(it->second.sd * c.scale, c.decimals);
}

std::string single_cell(const MetricReport* r, const Column& c) {
  if (r == nullptr) return "–";
  auto it = r->scalars.find(c.key);
  if (it == r->scalars.end() || !it->second) return "n/a";
  return fmt(*it->second * c.scale, c.decimals);
}

void table_header(std::ostringstream& os, const std::vector<std::string>& cols) {
  os << "|";
  for (const auto& c : cols) os << " " << c << " |";
  os << "\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i == 0 ? " :--- |" : " ---: |");
  os << "\n";
}

void table_row(std::ostringstream& os, const std::vector<std::string>& cells) {
  os << "|";
  for (const auto& c : cells) os << " " << c << " |";
  os << "\n";
}

std::string pretty_env(const std::string& e) {
  if (e == "all") return "All";
  std::string s = e;
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

const Group* find(const std::vector<Group>& gs, const std::string& label, const std::string& task,
                  const std::string& protocol, const std::string& band, const std::string& env) {
  for (const auto& g : gs) {
    if (g.label == label && g.task == task && g.protocol == protocol && g.band == band &&
        g.environment == env) {
      return &g;
    }
  }
  return nullptr;
}

/// Labels in first-seen order among groups passing `keep`.
template <typename Pred>
std::vector<std::string> labels_where(const std::vector<Group>& gs, Pred keep) {
  std::vector<std::string> out;
  for (const auto& g : gs) {
    if (keep(g) && std::find(out.begin(), out.end(), g.label) == out.end()) out.push_back(g.label);
  }
  return out;
}

const char* kDep = "identity_dependent";
const char* kAgn = "identity_agnostic";

/// The band a label's headline rows use: 5 GHz when present.
std::string headline_band(const std::vector<Group>& gs, const std::string& label,
                          const std::string& protocol) {
  std::string band;
  for (const auto& g : gs) {
    if (g.label != label || g.protocol != protocol || g.environment != "all") continue;
    if (g.band == "5") return "5";
    if (band.empty()) band = g.band;
  }
  return band;
}

void backbone_table(std::ostringstream& os, const std::vector<Group>& gs) {
  const auto labels = labels_where(gs, [](const Group& g) {
    return g.protocol == "standard" && g.environment == "all";
  });
  if (labels.empty()) return;
  os << "## Backbone comparison (standard protocol, all environments)\n\n";
  std::vector<std::string> cols = {"Configuration", "Backbone", "Band"};
  for (const auto& c : dependent_columns()) cols.push_back("ID " + c.title);
  for (const auto& c : counting_columns()) cols.push_back("IA " + c.title);
  table_header(os, cols);
  for (const auto& label : labels) {
    const std::string band = headline_band(gs, label, "standard");
    const Group* dep = find(gs, label, kDep, "standard", band, "all");
    const Group* agn = find(gs, label, kAgn, "standard", band, "all");
    const Group* any = dep != nullptr ? dep : agn;
    std::vector<std::string> cells = {label, any->backbone, band};
    for (const auto& c : dependent_columns()) cells.push_back(mean_sd_cell(dep, c));
    for (const auto& c : counting_columns()) cells.push_back(mean_sd_cell(agn, c));
    table_row(os, cells);
  }
  os << "\n";
}

void environment_tables(std::ostringstream& os, const std::vector<Group>& gs) {
  for (const char* task : {kDep, kAgn}) {
    const auto labels = labels_where(gs, [&](const Group& g) {
      return g.protocol == "standard" && g.task == task;
    });
    if (labels.empty()) continue;
    const auto& columns = std::string(task) == kDep ? dependent_columns() : counting_columns();
    os << "## " << (std::string(task) == kDep ? "Identity-dependent" : "Identity-agnostic")
       << " results by environment (5 GHz / 2.4 GHz)\n\n";
    std::vector<std::string> cols = {"Configuration", "Environment"};
    for (const auto& c : columns) cols.push_back(c.title);
    table_header(os, cols);
    for (const auto& label : labels) {
      for (const std::string env : {"all", "classroom", "empty", "meeting"}) {
        const Group* g5 = find(gs, label, task, "standard", "5", env);
        const Group* g24 = find(gs, label, task, "standard", "2.4", env);
        const Group* gall = find(gs, label, task, "standard", "all", env);
        if (g5 == nullptr && g24 == nullptr && gall == nullptr) continue;
        std::vector<std::string> cells = {label, pretty_env(env)};
        for (const auto& c : columns) {
          if (g5 == nullptr && g24 == nullptr) {
            cells.push_back(mean_sd_cell(gall, c) + " (both bands)");
          } else {
            cells.push_back(mean_sd_cell(g5, c) + " / " + mean_sd_cell(g24, c));
          }
        }
        table_row(os, cells);
      }
    }
    os << "\n";
  }
}

void model_tables(std::ostringstream& os, const std::vector<Group>& gs) {
  for (const char* task : {kDep, kAgn}) {
    const auto labels = labels_where(gs, [&](const Group& g) {
      return g.protocol == "standard" && g.task == task && g.environment == "all";
    });
    if (labels.empty()) continue;
    const bool dep = std::string(task) == kDep;
    const auto& columns = dep ? dependent_columns() : counting_columns();
    os << "## Model comparison, " << (dep ? "identity-dependent" : "identity-agnostic") << "\n\n";
    std::vector<std::string> cols = {"Model"};
    for (const auto& c : columns) cols.push_back(c.title);
    table_header(os, cols);
    for (const auto& label : labels) {
      const Group* g = find(gs, label, task, "standard", headline_band(gs, label, "standard"), "all");
      if (g == nullptr) continue;
      std::vector<std::string> cells = {label};
      for (const auto& c : columns) cells.push_back(mean_sd_cell(g, c));
      table_row(os, cells);
    }
    os << "\n";
  }
}

/// LUO and LOEO share one layout: counting cell accuracy, MAE, R² and
/// dependent macro-F1 per held-out split, then the average row.
void shift_table(std::ostringstream& os, const std::vector<Group>& gs, const std::string& protocol,
                 const std::string& title, const std::string& train_col,
                 const std::string& test_col) {
  const auto labels = labels_where(gs, [&](const Group& g) { return g.protocol == protocol; });
  if (labels.empty()) return;
  os << "## " << title << "\n\n";
  const Column cell{"cell_accuracy", "Cell Acc. (%)", 100, 2};
  const Column mae{"mae", "MAE", 1, 4};
  const Column r2{"r2", "R²", 1, 4};
  const Column f1{"macro_f1", "ID Macro-F1 (%)", 100, 2};
  table_header(os, {"Configuration", train_col, test_col, "IA " + cell.title, "IA MAE", "IA R²",
                    f1.title});
  for (const auto& label : labels) {
    std::string band;
    for (const auto& g : gs) {
      if (g.label == label && g.protocol == protocol && (band.empty() || g.band == "5")) band = g.band;
    }
    const std::string env = protocol == "loeo" ? "all" : [&] {
      for (const auto& g : gs) {
        if (g.label == label && g.protocol == protocol && g.band == band) return g.environment;
      }
      return std::string("all");
    }();
    const Group* agn = find(gs, label, kAgn, protocol, band, env);
    const Group* dep = find(gs, label, kDep, protocol, band, env);

    std::vector<std::string> descriptors;
    for (const Group* g : {agn, dep}) {
      if (g == nullptr) continue;
      for (const auto& r : g->reports) {
        if (std::find(descriptors.begin(), descriptors.end(), r.split_descriptor) == descriptors.end()) {
          descriptors.push_back(r.split_descriptor);
        }
      }
    }
    auto pick = [](const Group* g, const std::string& d) -> const MetricReport* {
      if (g == nullptr) return nullptr;
      for (const auto& r : g->reports) {
        if (r.split_descriptor == d) return &r;
      }
      return nullptr;
    };
    for (const auto& d : descriptors) {
      const auto slash = d.find(" / ");
      const std::string tr = slash == std::string::npos ? d : d.substr(0, slash);
      const std::string te = slash == std::string::npos ? "" : d.substr(slash + 3);
      table_row(os, {label, tr, te, single_cell(pick(agn, d), cell), single_cell(pick(agn, d), mae),
                     single_cell(pick(agn, d), r2), single_cell(pick(dep, d), f1)});
    }
    auto avg = [](const Group* g, const Column& c) -> std::string {
      if (g == nullptr) return "–";
      const auto a = aggregate(g->reports);
      auto it = a.find(c.key);
      if (it == a.end() || it->second.n == 0) return "n/a";
      return fmt(it->second.mean * c.scale, c.decimals);
    };
    table_row(os, {"**Avg.** " + label, "–", "–", avg(agn, cell), avg(agn, mae), avg(agn, r2),
                   avg(dep, f1)});
  }
  os << "\n";
}

void invariance_table(std::ostringstream& os, const std::vector<Group>& gs) {
  const auto labels = labels_where(gs, [](const Group& g) { return !g.invariance.empty(); });
  if (labels.empty()) return;
  os << "## Identity invariance of the learned features\n\n";
  table_header(os, {"Configuration", "Split", "Euclidean IA", "Euclidean ID", "Cosine IA",
                    "Cosine ID"});
  for (const auto& label : labels) {
    const Group* agn = nullptr;
    const Group* dep = nullptr;
    for (const auto& g : gs) {
      if (g.label != label || g.invariance.empty()) continue;
      (g.task == kAgn ? agn : dep) = &g;
    }
    std::vector<std::string> descriptors;
    for (const Group* g : {agn, dep}) {
      if (g == nullptr) continue;
      for (const auto& s : g->invariance) {
        const auto d = s.at("split").get<std::string>();
        if (std::find(descriptors.begin(), descriptors.end(), d) == descriptors.end()) descriptors.push_back(d);
      }
    }
    auto pick = [](const Group* g, const std::string& d) -> const json* {
      if (g == nullptr) return nullptr;
      for (const auto& s : g->invariance) {
        if (s.at("split") == d) return &s;
      }
      return nullptr;
    };
    auto cell = [](const json* s, const char* metric) -> std::string {
      if (s == nullptr) return "–";
      return fmt(s->at(std::string(metric) + "_mean").get<double>(), 2) + " ± " +
             fmt(s->at(std::string(metric) + "_sd").get<double>(), 2);
    };
    std::map<std::string, std::vector<double>> avgs;
    for (const auto& d : descriptors) {
      const json* a = pick(agn, d);
      const json* b = pick(dep, d);
      table_row(os, {label, d, cell(a, "euclidean"), cell(b, "euclidean"), cell(a, "cosine"),
                     cell(b, "cosine")});
      if (a != nullptr) {
        avgs["ea"].push_back(a->at("euclidean_mean").get<double>());
        avgs["ca"].push_back(a->at("cosine_mean").get<double>());
      }
      if (b != nullptr) {
        avgs["ed"].push_back(b->at("euclidean_mean").get<double>());
        avgs["cd"].push_back(b->at("cosine_mean").get<double>());
      }
    }
    auto avg = [&](const char* k) -> std::string {
      const auto& v = avgs[k];
      if (v.empty()) return "–";
      return fmt(mean_sd(v).mean, 2);
    };
    table_row(os, {"**Average** " + label, "–", avg("ea"), avg("ed"), avg("ca"), avg("cd")});
  }
  os << "\n";
}

void ablation_table(std::ostringstream& os, const std::vector<Group>& gs) {
  const auto labels = labels_where(gs, [](const Group& g) {
    return g.protocol == "standard" && g.task == kAgn && g.environment == "all";
  });
  if (labels.empty()) return;
  os << "## Ablation, identity-agnostic counting\n\n";
  std::vector<std::string> cols = {"Configuration"};
  for (const auto& c : counting_columns()) cols.push_back(c.title);
  table_header(os, cols);
  for (const auto& label : labels) {
    const Group* g = find(gs, label, kAgn, "standard", headline_band(gs, label, "standard"), "all");
    if (g == nullptr) continue;
    std::vector<std::string> cells = {label};
    for (const auto& c : counting_columns()) cells.push_back(mean_sd_cell(g, c));
    table_row(os, cells);
  }
  os << "\n";
}

json series(const std::vector<Group>& gs) {
  json pa = json::array();
  json uc = json::array();
  for (const auto& g : gs) {
    const json id = {{"label", g.label},   {"task", g.task},          {"protocol", g.protocol},
                     {"band", g.band},     {"environment", g.environment}};
    // Per-activity MAE: mean and SD across splits.
    if (g.task == kAgn) {
      json values = json::object();
      for (std::size_t k = 0; k < kActivities; ++k) {
        std::vector<double> v;
        for (const auto& r : g.reports) {
          if (r.per_activity_mae) v.push_back((*r.per_activity_mae)[k]);
        }
        if (v.empty()) continue;
        const auto ms = mean_sd(v);
        values[std::string(to_string(static_cast<Activity>(k)))] = {{"mean", ms.mean}, {"sd", ms.sd}};
      }
      json e = id;
      e["values"] = values;
      pa.push_back(e);
    }
    // Per-user-count curve: group metric averaged over splits; sample-level
    // mean and SD pooled exactly from the per-split moments.
    std::map<std::size_t, std::vector<GroupStat>> by_count;
    for (const auto& r : g.reports) {
      for (const auto& [k, s] : r.per_user_count) by_count[k].push_back(s);
    }
    json counts = json::object();
    for (const auto& [k, stats] : by_count) {
      double n = 0, sum = 0, sumsq = 0;
      std::vector<double> metric;
      for (const auto& s : stats) {
        const auto sn = static_cast<double>(s.samples);
        n += sn;
        sum += sn * s.mean;
        sumsq += sn * (s.sd * s.sd + s.mean * s.mean);
        metric.push_back(s.metric);
      }
      const double mean = n > 0 ? sum / n : 0.0;
      const double var = n > 0 ? std::max(0.0, sumsq / n - mean * mean) : 0.0;
      counts[std::to_string(k)] = {{"samples", static_cast<std::size_t>(n)},
                                   {"metric", mean_sd(metric).mean},
                                   {"mean", mean},
                                   {"sd", std::sqrt(var)}};
    }
    json e = id;
    e["metric"] = g.task == kDep ? "macro_f1" : "mae";
    e["counts"] = counts;
    uc.push_back(e);
  }
  return {{"per_activity_mae", pa}, {"per_user_count", uc}};
}

}  // namespace

RenderedReport render_report(const std::vector<fs::path>& run_dirs) {
  RenderedReport out;
  if (run_dirs.empty()) {
    out.markdown = "no runs\n";
    out.series = {{"per_activity_mae", json::array()}, {"per_user_count", json::array()}};
    return out;
  }
  const auto groups = load_groups(run_dirs);
  std::ostringstream os;
  os << "# Results\n\nValues are mean ± SD over splits.\n\n";
  backbone_table(os, groups);
  environment_tables(os, groups);
  model_tables(os, groups);
  shift_table(os, groups, "luo", "Leave-users-out", "Train users", "Test users");
  shift_table(os, groups, "loeo", "Leave-one-environment-out", "Train env.", "Test env.");
  invariance_table(os, groups);
  ablation_table(os, groups);
  os << "## Pooled runs\n\n";
  table_header(os, {"Configuration", "Task", "Protocol", "Band", "Environment", "Splits",
                    "Config fingerprint"});
  json fingerprints = json::array();
  for (const auto& g : groups) {
    table_row(os, {g.label, g.task, g.protocol, g.band, pretty_env(g.environment),
                   std::to_string(g.reports.size()), g.fingerprint});
    fingerprints.push_back({{"label", g.label}, {"task", g.task}, {"fingerprint", g.fingerprint}});
  }
  out.markdown = os.str();
  out.series = series(groups);
  out.series["fingerprints"] = fingerprints;
  return out;
}

std::vector<fs::path> discover_runs(const fs::path& output_dir) {
  std::vector<fs::path> out;
  const fs::path runs = output_dir / "runs";
  if (!fs::exists(runs)) return out;
  for (const auto& d : fs::directory_iterator(runs)) {
    const fs::path rec = d.path() / "run_record.json";
    if (!fs::exists(rec)) continue;
    if (read_json(rec).value("complete", false)) out.push_back(d.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& output_dir) {
  const auto r = render_report(run_dirs);
  const fs::path base = output_dir / "reports";
  fs::create_directories(base);
  fs::path dir;
  for (int i = 1;; ++i) {
    char num[16];
    std::snprintf(num, sizeof num, "report-%03d", i);
    dir = base / num;
    if (fs::create_directory(dir)) break;
  }
  {
    std::ofstream md(dir / "report.md");
    md << r.markdown;
    if (!md) throw IoError("cannot write " + (dir / "report.md").string());
  }
  json runs = json::array();
  for (const auto& d : run_dirs) runs.push_back(d.string());
  write_json(dir / "series.json", json{{"runs", runs}, {"series", r.series}});
  return r.markdown;
}

}  // namespace wicount
