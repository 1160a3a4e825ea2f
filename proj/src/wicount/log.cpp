// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/log.hpp"

#include <iostream>
#include <mutex>

namespace wicount {
namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::info;
LogSink g_sink;

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "?";
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void set_log_level(LogLevel level) {
  std::lock_guard lock(g_mutex);
  g_level = level;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (level < g_level) return;
  if (g_sink) {
    g_sink(level, message);
  } else {
    std::cerr << "[wicount " << level_name(level) << "] " << message << "\n";
  }
}

}  // namespace wicount
