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
#ifndef GDL_DIAGNOSTICS_HPP_
#define GDL_DIAGNOSTICS_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace gdl {

/// Emits a warning: counted, kept by any active capture, and printed to
/// stderr unless quiet mode is on. Thread safe.
void warn(const std::string& message);

std::size_t warning_count();
void set_quiet_warnings(bool quiet);

/// Collects warnings emitted during its lifetime (e.g. for a run manifest).
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages() const;

 private:
  std::vector<std::string> messages_;
  friend void warn(const std::string&);
};

}  // namespace gdl

#endif  // GDL_DIAGNOSTICS_HPP_
