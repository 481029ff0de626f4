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
#ifndef GDL_TOOLS_SELFTEST_HPP_
#define GDL_TOOLS_SELFTEST_HPP_

#include <ostream>

namespace gdl::tools {

/// Runs the invariant suites, printing one PASS/FAIL line each. The report
/// holds no timings, so reruns are byte-identical. Returns the number of
/// failed suites.
int run_selftest(std::ostream& out);

}  // namespace gdl::tools

#endif  // GDL_TOOLS_SELFTEST_HPP_
