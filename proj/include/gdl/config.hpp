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
#ifndef GDL_CONFIG_HPP_
#define GDL_CONFIG_HPP_

// Declarative experiment description. The JSON schema is documented in the
// README; every field is optional and unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdl/attacks.hpp"
#include "gdl/data.hpp"
#include "gdl/eval.hpp"
#include "gdl/stochastic_net.hpp"
#include "gdl/trainer.hpp"

namespace gdl::io {

using Json = nlohmann::json;

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string kind = "idx";  // "idx" or "two_moons"
  // Relative paths resolve against the working directory.
  std::string train_images = "data/mnist-subset/train-images-idx3-ubyte";
  std::string train_labels = "data/mnist-subset/train-labels-idx1-ubyte";
  std::string test_images = "data/mnist-subset/t10k-images-idx3-ubyte";
  std::string test_labels = "data/mnist-subset/t10k-labels-idx1-ubyte";
  std::size_t train_size = 2000;
  std::size_t test_size = 500;
  std::size_t downsample = 2;  // average-pool factor, 1 keeps 28x28
  double noise = 0.1;          // two_moons only
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct ArchSpec {
  std::vector<std::size_t> hidden{256, 128};
  bool stochastic = true;
  std::string activation = "relu";  // "relu" or "leaky_relu"
  double slope = 0.0;
  double prior_sigma = 0.05;
  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

struct GridSpec {
  std::size_t models = 4;
  std::size_t resolution = 41;
  double extent = 0.5;
  std::size_t input_id = 0;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct EvalSpec {
  /// Each attack runs at every epsilon with its step scaled by
  /// step / epsilon of the template.
  std::vector<attacks::AttackSpec> attacks{
      {attacks::Family::kPgd, attacks::Norm::kLinf, 0.3, 0.075, 20},
      {attacks::Family::kEot1Pgd, attacks::Norm::kLinf, 0.3, 0.075, 20},
      {attacks::Family::kEotPgd, attacks::Norm::kLinf, 0.3, 0.075, 20}};
  std::vector<double> epsilons{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  std::size_t seeds = 5;
  std::size_t test_points = 200;
  std::size_t kappa_points = 200;
  std::size_t kappa_grads = 100;
  std::size_t transfer_k = 10;
  attacks::AttackSpec transfer_attack{attacks::Family::kPgd, attacks::Norm::kLinf, 0.3, 0.075, 20};
  GridSpec grid;
  eval::ChecklistSettings checklist;
  std::vector<double> lambda_grid{0.1, 0.3, 1.0, 3.0};
  std::size_t validation_size = 200;
  attacks::AttackSpec sweep_attack{attacks::Family::kEotPgd, attacks::Norm::kLinf, 0.3, 0.075, 20};
  friend bool operator==(const EvalSpec&, const EvalSpec&) = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;  // master seed; schedule.seed always equals it
  std::string out_dir = "runs";
  DatasetSpec dataset;
  ArchSpec arch;
  train::TrainSchedule schedule = [] {
    train::TrainSchedule s;
    s.seed = 1;
    return s;
  }();
  EvalSpec eval;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

Json to_json(const ExperimentConfig& config);
/// Throws ConfigError on unknown keys, wrong types or failed validation.
ExperimentConfig config_from_json(const Json& j);

std::string serialize(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);

/// Applies "a.b.c=value" to a serialized config. The value is parsed as
/// JSON and falls back to a string. The path must name an existing key
/// (array elements by index).
void apply_override(Json& j, const std::string& assignment);

/// Reads a JSON config (empty path: defaults), applies the overrides and
/// validates. With check_files, referenced dataset files must exist.
ExperimentConfig load_config(const std::string& path, std::span<const std::string> overrides = {},
                             bool check_files = true);

/// fnv1a64 of the compact JSON of the sections that define a trained model
/// (seed, dataset, arch, schedule), as 16 hex digits. Eval and output
/// settings do not enter.
std::string config_hash(const ExperimentConfig& config);

struct Datasets {
  data::Dataset train;
  data::Dataset test;
};

/// Loads or generates the train and test sets. two_moons draws both from
/// the "data" stream of the master seed.
Datasets load_datasets(const ExperimentConfig& config);

net::Architecture make_architecture(const ArchSpec& spec, std::size_t input_dim, std::size_t classes);

/// A net for `config`, initialized from the "weights" stream.
net::StochasticNet make_net(const ExperimentConfig& config, std::size_t input_dim, std::size_t classes);

}  // namespace gdl::io

#endif  // GDL_CONFIG_HPP_
