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
// gdl: command-line entry points. Exit codes: 0 success, 1 usage,
// 2 configuration, 3 runtime.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdl/checkpoint.hpp"
#include "gdl/config.hpp"
#include "gdl/data.hpp"
#include "gdl/diagnostics.hpp"
#include "gdl/eval.hpp"
#include "gdl/report.hpp"
#include "gdl/trainer.hpp"
#include "selftest.hpp"

namespace {

using namespace gdl;

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Fixed settings of the rotated-gradient sweep written by `stats`.
constexpr std::size_t kRotationPoints = 20;
constexpr std::size_t kRotationModels = 20;
constexpr double kRotationAlpha = 1e-2;

struct Options {
  std::string config;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
};

io::ExperimentConfig resolve(const Options& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.out_dir) overrides.push_back("out_dir=" + nlohmann::json(*o.out_dir).dump());
  return io::load_config(o.config, overrides);
}

std::string out_path(const io::ExperimentConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

// Writes `text` under out_dir and records the file name in the manifest.
void emit(const io::ExperimentConfig& c, io::Manifest& m, const std::string& name, const std::string& text) {
  io::write_text(out_path(c, name), text);
  m.outputs.push_back(name);
}

void finish(const io::ExperimentConfig& c, io::Manifest& m, const WarningCapture& capture) {
  m.warnings = capture.messages();
  io::write_text(out_path(c, "manifest_" + m.command + ".json"), io::manifest_to_string(m));
}

io::Manifest manifest_for(const std::string& command, const io::ExperimentConfig& c) {
  io::Manifest m;
  m.command = command;
  m.config_hash = io::config_hash(c);
  m.seed = c.seed;
  return m;
}

net::StochasticNet load_net(const Options& o, const io::ExperimentConfig& c, const io::Datasets& d) {
  io::Checkpoint ck = io::load_checkpoint(o.checkpoint, io::config_hash(c));
  const net::Architecture expected = io::make_architecture(c.arch, d.test.dim(), d.test.num_classes);
  if (!(ck.net.architecture() == expected)) {
    throw io::ConfigError("checkpoint architecture does not match the config (input " +
                          std::to_string(ck.net.architecture().input_dim()) + ", classes " +
                          std::to_string(ck.net.architecture().num_classes()) + ")");
  }
  return std::move(ck.net);
}

data::Dataset head(const data::Dataset& d, std::size_t n) { return d.slice(0, std::min(n, d.size())); }

int cmd_train(const Options& o) {
  const io::ExperimentConfig c = resolve(o);
  WarningCapture capture;
  io::Manifest m = manifest_for("train", c);
  const io::Datasets d = io::load_datasets(c);
  net::StochasticNet net = io::make_net(c, d.train.dim(), d.train.num_classes);
  emit(c, m, "config.json", io::serialize(c));
  train::Callbacks cb;
  cb.on_epoch = [](const train::EpochLog& e) {
    std::cout << "epoch " << e.epoch << " loss " << e.loss << " acc " << e.accuracy << " kappa/p "
              << e.kappa_over_p << " lambda " << e.lambda << "\n";
  };
  const std::string hash = io::config_hash(c);
  cb.on_checkpoint = [&](const net::StochasticNet& n, std::size_t epoch) {
    const io::CheckpointMeta meta{epoch + 1, c.seed, hash};
    emit(c, m, "checkpoint_epoch" + std::to_string(epoch + 1) + ".json", io::checkpoint_to_string(n, meta));
  };
  const train::TrainLog log = train::train(net, d.train, c.schedule, cb);
  emit(c, m, "checkpoint.json", io::checkpoint_to_string(net, {c.schedule.epochs, c.seed, hash}));
  emit(c, m, "trainlog.csv", io::trainlog_csv(log));
  finish(c, m, capture);
  return 0;
}

int cmd_attack(const Options& o) {
  const io::ExperimentConfig c = resolve(o);
  WarningCapture capture;
  io::Manifest m = manifest_for("attack", c);
  const io::Datasets d = io::load_datasets(c);
  const net::StochasticNet net = load_net(o, c, d);
  const data::Dataset test = head(d.test, c.eval.test_points);
  const auto seeds = eval::default_seeds(c.eval.seeds);
  std::vector<eval::RobustnessRow> rows;
  for (const auto& tmpl : c.eval.attacks) {
    for (double eps : c.eval.epsilons) {
      attacks::AttackSpec spec = tmpl;
      spec.step = tmpl.epsilon > 0.0 ? tmpl.step * eps / tmpl.epsilon : tmpl.step;
      spec.epsilon = eps;
      const auto r = eval::robust_accuracy(net, test, spec, seeds);
      for (const auto& row : r) {
        std::cout << row.attack << " eps " << row.epsilon << " seed " << row.seed << " acc " << row.accuracy << "\n";
      }
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  emit(c, m, "robustness.csv", io::robustness_csv(rows));
  finish(c, m, capture);
  return 0;
}

int cmd_stats(const Options& o) {
  const io::ExperimentConfig c = resolve(o);
  WarningCapture capture;
  io::Manifest m = manifest_for("stats", c);
  const io::Datasets d = io::load_datasets(c);
  const net::StochasticNet net = load_net(o, c, d);

  RngStream kappa_rng = RngStream::for_purpose(c.seed, purpose::kEvalAttack, 1);
  const auto kappa = eval::kappa_density(net, head(d.test, c.eval.kappa_points), c.eval.kappa_grads, kappa_rng);
  emit(c, m, "kappa_density.csv", io::kappa_csv(kappa));

  RngStream transfer_rng = RngStream::for_purpose(c.seed, purpose::kEvalAttack, 2);
  const Tensor transfer =
      eval::transfer_matrix(net, head(d.test, c.eval.test_points), c.eval.transfer_k, c.eval.transfer_attack,
                            transfer_rng);
  emit(c, m, "transfer.csv", io::transfer_csv(transfer));
  std::cout << "transfer off-diagonal mean " << eval::off_diagonal_mean(transfer) << "\n";

  RngStream grid_rng = RngStream::for_purpose(c.seed, purpose::kEvalAttack, 3);
  const auto models = eval::draw_models(net, c.eval.grid.models, grid_rng);
  if (c.eval.grid.input_id >= d.test.size()) throw io::ConfigError("eval.grid.input_id is past the test set");
  const data::Dataset point = d.test.slice(c.eval.grid.input_id, c.eval.grid.input_id + 1);
  const Tensor g = eval::expected_gradient(models, point.x, point.y);
  const std::size_t p = point.dim();
  std::vector<double> d1(g.data().begin(), g.data().end()), d2(p);
  double n1 = 0.0;
  for (double v : d1) n1 += v * v;
  n1 = std::sqrt(n1);
  if (n1 == 0.0) {
    warn("grid: zero expected gradient, using a random first direction");
    for (double& v : d1) v = grid_rng.normal();
    n1 = 0.0;
    for (double v : d1) n1 += v * v;
    n1 = std::sqrt(n1);
  }
  for (double& v : d1) v /= n1;
  // Second direction: a Gaussian draw orthogonalized against the first.
  for (double& v : d2) v = grid_rng.normal();
  double proj = 0.0, n2 = 0.0;
  for (std::size_t j = 0; j < p; ++j) proj += d1[j] * d2[j];
  for (std::size_t j = 0; j < p; ++j) d2[j] -= proj * d1[j];
  for (double v : d2) n2 += v * v;
  for (double& v : d2) v /= std::sqrt(n2);
  const std::vector<double> center(point.x.data().begin(), point.x.data().end());
  const eval::DecisionGrid grid =
      eval::decision_grid(models, center, d1, d2, c.eval.grid.extent, c.eval.grid.resolution);
  for (std::size_t k = 0; k < models.size(); ++k) {
    emit(c, m, "grid_" + std::to_string(k) + ".csv", io::grid_csv(grid, k));
  }

  RngStream rot_rng = RngStream::for_purpose(c.seed, purpose::kEvalAttack, 4);
  const auto rot_models = eval::draw_models(net, kRotationModels, rot_rng);
  const data::Dataset rot_points = head(d.test, kRotationPoints);
  std::vector<double> degrees;
  for (int t = 0; t <= 180; t += 15) degrees.push_back(t);
  const auto sweep = eval::rotation_sweep(rot_models, rot_points.x, rot_points.y, degrees, kRotationAlpha, rot_rng);
  emit(c, m, "rotation.csv", io::rotation_csv(sweep));
  finish(c, m, capture);
  return 0;
}

int cmd_checklist(const Options& o) {
  const io::ExperimentConfig c = resolve(o);
  WarningCapture capture;
  io::Manifest m = manifest_for("checklist", c);
  const io::Datasets d = io::load_datasets(c);
  const net::StochasticNet net = load_net(o, c, d);
  const eval::ChecklistReport report = eval::obfuscation_checklist(net, head(d.test, c.eval.test_points), c.eval.checklist);
  for (const auto& item : report.items) {
    std::cout << (item.pass ? "PASS " : "FAIL ") << item.name << ": " << item.evidence << "\n";
  }
  emit(c, m, "checklist.csv", io::checklist_csv(report));
  finish(c, m, capture);
  return 0;
}

int cmd_sweep_lambda(const Options& o) {
  const io::ExperimentConfig c = resolve(o);
  WarningCapture capture;
  io::Manifest m = manifest_for("sweep-lambda", c);
  const io::Datasets d = io::load_datasets(c);
  const std::size_t n_val = c.eval.validation_size;
  if (n_val == 0 || n_val >= d.train.size()) {
    throw io::ConfigError("eval.validation_size must lie in (0, train size)");
  }
  const data::Dataset train_part = d.train.slice(0, d.train.size() - n_val);
  const data::Dataset validation = d.train.slice(d.train.size() - n_val, d.train.size());
  auto make = [&] { return io::make_net(c, d.train.dim(), d.train.num_classes); };
  const train::LambdaSweep sweep =
      train::validate_lambda(make, train_part, validation, c.schedule, c.eval.lambda_grid, c.eval.sweep_attack);
  for (const auto& p : sweep.points) std::cout << "lambda " << p.lambda << " robust " << p.robust_accuracy << "\n";
  std::cout << "best lambda " << sweep.best << "\n";
  emit(c, m, "lambda_sweep.csv", io::lambda_csv(sweep));
  finish(c, m, capture);
  return 0;
}

int cmd_selftest(const Options& o) {
  std::ostringstream report;
  set_quiet_warnings(true);
  const int failed = tools::run_selftest(report);
  std::cout << report.str();
  if (o.out_dir) io::write_text((std::filesystem::path(*o.out_dir) / "selftest.txt").string(), report.str());
  return failed == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GradDiv lab: training, attacks and statistics for stochastic nets"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool config, bool checkpoint) {
    if (config) sub->add_option("config", o.config, "Experiment config (JSON)")->required();
    if (checkpoint) sub->add_option("checkpoint", o.checkpoint, "Checkpoint (JSON)")->required();
    sub->add_option("--seed", o.seed, "Master seed (overrides the config)");
    sub->add_option("--out-dir", o.out_dir, "Output directory (overrides the config)");
    sub->add_option("--override", o.overrides, "Dotted key=value assignment, repeatable")->allow_extra_args(false);
  };
  auto* train_cmd = app.add_subcommand("train", "Train a net; writes trainlog.csv and checkpoints");
  add_common(train_cmd, true, false);
  auto* attack_cmd = app.add_subcommand("attack", "Robust accuracy sweep; writes robustness.csv");
  add_common(attack_cmd, true, true);
  auto* stats_cmd = app.add_subcommand("stats", "kappa density, transfer matrix, decision grids, rotation sweep");
  add_common(stats_cmd, true, true);
  auto* checklist_cmd = app.add_subcommand("checklist", "Gradient-obfuscation checklist; writes checklist.csv");
  add_common(checklist_cmd, true, true);
  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "Pick lambda on a validation split; writes lambda_sweep.csv");
  add_common(sweep_cmd, true, false);
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the invariant suites");
  add_common(selftest_cmd, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(o);
    if (*attack_cmd) return cmd_attack(o);
    if (*stats_cmd) return cmd_stats(o);
    if (*checklist_cmd) return cmd_checklist(o);
    if (*sweep_cmd) return cmd_sweep_lambda(o);
    if (*selftest_cmd) return cmd_selftest(o);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
