// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace wicount {
namespace {

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Activity a) {
  return kActivityVocabulary.at(static_cast<std::size_t>(a));
}

std::string_view to_string(Band b) { return b == Band::ghz5 ? "5" : "2.4"; }

std::string_view to_string(Environment e) {
  switch (e) {
    case Environment::classroom: return "classroom";
    case Environment::meeting: return "meeting";
    case Environment::empty: return "empty";
  }
  return "?";
}

std::optional<Activity> parse_activity(std::string_view s) {
  const std::string v = lower_trim(s);
  for (std::size_t i = 0; i < kActivityVocabulary.size(); ++i) {
    if (v == kActivityVocabulary[i]) return static_cast<Activity>(i);
  }
  static const std::pair<std::string_view, Activity> aliases[] = {
      {"walking", Activity::walk},        {"rotating", Activity::rotation},
      {"jumping", Activity::jump},        {"waving", Activity::wave},
      {"lying_down", Activity::lie_down}, {"picking_up", Activity::pick_up},
      {"sitting_down", Activity::sit_down}, {"standing_up", Activity::stand_up},
  };
  for (const auto& [name, act] : aliases) {
    if (v == name) return act;
  }
  return std::nullopt;
}

bool is_absent_token(std::string_view s) {
  const std::string v = lower_trim(s);
  return v.empty() || v == "null" || v == "nan" || v == "none" || v == "\xe2\x88\x85";
}

std::optional<Band> parse_band(std::string_view s) {
  const std::string v = lower_trim(s);
  if (v == "5" || v == "5ghz" || v == "5.0") return Band::ghz5;
  if (v == "2.4" || v == "2.4ghz" || v == "2_4") return Band::ghz2_4;
  return std::nullopt;
}

std::optional<Environment> parse_environment(std::string_view s) {
  const std::string v = lower_trim(s);
  if (v == "classroom") return Environment::classroom;
  if (v == "meeting" || v == "meeting_room") return Environment::meeting;
  if (v == "empty" || v == "empty_room") return Environment::empty;
  return std::nullopt;
}

}  // namespace wicount
