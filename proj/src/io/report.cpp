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
#include "gdl/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace gdl::io {
namespace {

std::string join(std::initializer_list<std::string> fields) {
  std::string line;
  for (const auto& f : fields) {
    if (!line.empty()) line += ',';
    line += f;
  }
  return line + '\n';
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string robustness_csv(std::span<const eval::RobustnessRow> rows) {
  std::string out = "attack,mode,norm,epsilon,seed,accuracy\n";
  for (const auto& r : rows) {
    out += join({csv_field(r.attack), csv_field(r.mode), csv_field(r.norm), num(r.epsilon), std::to_string(r.seed),
                 num(r.accuracy)});
  }
  return out;
}

std::string kappa_csv(std::span<const eval::KappaRow> rows) {
  std::string out = "input_id,kappa_hat,rho_hat\n";
  for (const auto& r : rows) out += join({num(r.input_id), num(r.kappa_hat), num(r.rho_hat)});
  return out;
}

std::string transfer_csv(const Tensor& matrix) {
  std::string out = "source,target,accuracy\n";
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) out += join({num(i), num(j), num(matrix.at(i, j))});
  }
  return out;
}

std::string trainlog_csv(const train::TrainLog& log) {
  std::string out = "epoch,loss,acc,rho,kappa_over_p,rmean,rdpp,lambda,lr\n";
  for (const auto& e : log) {
    out += join({num(e.epoch), num(e.loss), num(e.accuracy), num(e.rho), num(e.kappa_over_p), num(e.r_mean),
                 num(e.r_dpp), num(e.lambda), num(e.learning_rate)});
  }
  return out;
}

std::string grid_csv(const eval::DecisionGrid& grid, std::size_t model) {
  if (model >= grid.labels.size()) throw std::out_of_range("grid has no model " + std::to_string(model));
  std::string out = "a,b,label\n";
  const auto& labels = grid.labels[model];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += join({num(grid.a[i]), num(grid.b[i]), std::to_string(labels[i])});
  }
  return out;
}

std::string lambda_csv(const train::LambdaSweep& sweep) {
  std::string out = "lambda,robust_accuracy\n";
  for (const auto& p : sweep.points) out += join({num(p.lambda), num(p.robust_accuracy)});
  return out;
}

std::string rotation_csv(std::span<const eval::RotationPoint> points) {
  std::string out = "theta_deg,delta,cosine\n";
  for (const auto& p : points) out += join({num(p.theta_deg), num(p.delta), num(p.cosine)});
  return out;
}

std::string checklist_csv(const eval::ChecklistReport& report) {
  std::string out = "item,pass,evidence\n";
  for (const auto& it : report.items) {
    out += join({csv_field(it.name), it.pass ? "1" : "0", csv_field(it.evidence)});
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string manifest_to_string(const Manifest& m) {
  const nlohmann::json j{{"command", m.command},
                         {"config_hash", m.config_hash},
                         {"seed", m.seed},
                         {"outputs", m.outputs},
                         {"warnings", m.warnings}};
  return j.dump(2) + "\n";
}

}  // namespace gdl::io
