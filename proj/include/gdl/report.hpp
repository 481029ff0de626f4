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
#ifndef GDL_REPORT_HPP_
#define GDL_REPORT_HPP_

// CSV artifacts and the run manifest. CSV files are UTF-8 with a header
// row, LF line endings and numbers in shortest round-trip form.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gdl/eval.hpp"
#include "gdl/trainer.hpp"

namespace gdl::io {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
/// Quotes a field holding a comma, quote or line break.
std::string csv_field(const std::string& text);

// attack,mode,norm,epsilon,seed,accuracy
std::string robustness_csv(std::span<const eval::RobustnessRow> rows);
// input_id,kappa_hat,rho_hat
std::string kappa_csv(std::span<const eval::KappaRow> rows);
// source,target,accuracy
std::string transfer_csv(const Tensor& matrix);
// epoch,loss,acc,rho,kappa_over_p,rmean,rdpp,lambda,lr
std::string trainlog_csv(const train::TrainLog& log);
// a,b,label
std::string grid_csv(const eval::DecisionGrid& grid, std::size_t model);
// lambda,robust_accuracy
std::string lambda_csv(const train::LambdaSweep& sweep);
// theta_deg,delta,cosine
std::string rotation_csv(std::span<const eval::RotationPoint> points);
// item,pass,evidence
std::string checklist_csv(const eval::ChecklistReport& report);

/// Writes bytes verbatim, creating parent directories.
void write_text(const std::string& path, const std::string& text);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
};

std::string manifest_to_string(const Manifest& manifest);

}  // namespace gdl::io

#endif  // GDL_REPORT_HPP_
