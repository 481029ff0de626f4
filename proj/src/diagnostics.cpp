/* Copyright 2026 The GradDiv Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "gdl/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>

namespace gdl {
namespace {

std::mutex g_mutex;
std::atomic<std::size_t> g_count{0};
bool g_quiet = false;
std::vector<WarningCapture*> g_captures;

}  // namespace

void warn(const std::string& message) {
  ++g_count;
  std::lock_guard lock(g_mutex);
  for (WarningCapture* capture : g_captures) capture->messages_.push_back(message);
  if (!g_quiet) std::cerr << "warning: " << message << '\n';
}

std::size_t warning_count() { return g_count.load(); }

void set_quiet_warnings(bool quiet) {
  std::lock_guard lock(g_mutex);
  g_quiet = quiet;
}

WarningCapture::WarningCapture() {
  std::lock_guard lock(g_mutex);
  g_captures.push_back(this);
}

WarningCapture::~WarningCapture() {
  std::lock_guard lock(g_mutex);
  g_captures.erase(std::remove(g_captures.begin(), g_captures.end(), this), g_captures.end());
}

std::vector<std::string> WarningCapture::messages() const {
  std::lock_guard lock(g_mutex);
  return messages_;
}

}  // namespace gdl
