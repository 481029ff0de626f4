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
#include "gdl/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "gdl/graddiv.hpp"
#include "gdl/rng.hpp"

namespace gdl::io {
namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const Json* v = find(key);
    if (v == nullptr) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
    }
    try {
      out = v->get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class E, class F>
  void get_enum(const std::string& key, E& out, F from_string) {
    std::string name;
    get(key, name);
    if (find(key) == nullptr) return;
    try {
      out = from_string(name);
    } catch (const std::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    std::string w = path_.empty() ? "config" : path_;
    return key.empty() ? w : w + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json attack_json(const attacks::AttackSpec& a) {
  return Json{{"family", attacks::to_string(a.family)},
              {"norm", attacks::to_string(a.norm)},
              {"epsilon", a.epsilon},
              {"step", a.step},
              {"iterations", a.iterations},
              {"eot_samples", a.eot_samples},
              {"mode", attacks::to_string(a.mode)},
              {"rotation_deg", a.rotation_deg},
              {"trials", a.trials},
              {"random_start", a.random_start},
              {"ensemble", a.ensemble}};
}

attacks::AttackSpec read_attack(const Json& j, const std::string& path) {
  attacks::AttackSpec a;
  Reader r(j, path);
  r.get_enum("family", a.family, attacks::family_from_string);
  r.get_enum("norm", a.norm, attacks::norm_from_string);
  r.get("epsilon", a.epsilon);
  r.get("step", a.step);
  r.get("iterations", a.iterations);
  r.get("eot_samples", a.eot_samples);
  r.get_enum("mode", a.mode, attacks::sampling_mode_from_string);
  r.get("rotation_deg", a.rotation_deg);
  r.get("trials", a.trials);
  r.get("random_start", a.random_start);
  r.get("ensemble", a.ensemble);
  r.finish();
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return a;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate(const ExperimentConfig& c) {
  const DatasetSpec& d = c.dataset;
  require(d.kind == "idx" || d.kind == "two_moons", "dataset.kind must be idx or two_moons, got " + d.kind);
  require(d.train_size > 0 && d.test_size > 0, "dataset sizes must be positive");
  if (d.kind == "two_moons") {
    require(d.train_size % 2 == 0 && d.test_size % 2 == 0, "two_moons sizes must be even");
    require(d.noise >= 0.0, "dataset.noise must be >= 0");
  } else {
    require(d.downsample >= 1 && 28 % d.downsample == 0, "dataset.downsample must divide 28");
  }
  require(c.arch.prior_sigma > 0.0 && std::isfinite(c.arch.prior_sigma), "arch.prior_sigma must be > 0");
  require(c.arch.activation == "relu" || c.arch.activation == "leaky_relu",
          "arch.activation must be relu or leaky_relu");
  try {
    c.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  const EvalSpec& e = c.eval;
  require(!e.epsilons.empty(), "eval.epsilons must not be empty");
  for (double eps : e.epsilons) require(eps >= 0.0, "eval.epsilons must be >= 0");
  require(e.seeds > 0, "eval.seeds must be positive");
  require(e.transfer_k >= 2, "eval.transfer_k must be at least 2");
  require(e.grid.models >= 1 && e.grid.resolution >= 2 && e.grid.extent > 0.0, "eval.grid is inconsistent");
  require(!e.lambda_grid.empty(), "eval.lambda_grid must not be empty");
  for (double l : e.lambda_grid) require(l >= 0.0, "eval.lambda_grid must be >= 0");
  require(e.kappa_grads >= 2, "eval.kappa_grads must be at least 2");
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  const DatasetSpec& d = c.dataset;
  j["dataset"] = {{"kind", d.kind},
                  {"train_images", d.train_images},
                  {"train_labels", d.train_labels},
                  {"test_images", d.test_images},
                  {"test_labels", d.test_labels},
                  {"train_size", d.train_size},
                  {"test_size", d.test_size},
                  {"downsample", d.downsample},
                  {"noise", d.noise}};
  j["arch"] = {{"hidden", c.arch.hidden},
               {"stochastic", c.arch.stochastic},
               {"activation", c.arch.activation},
               {"slope", c.arch.slope},
               {"prior_sigma", c.arch.prior_sigma}};
  const train::TrainSchedule& s = c.schedule;
  j["schedule"] = {{"epochs", s.epochs},
                   {"batch_size", s.batch_size},
                   {"learning_rate", s.learning_rate},
                   {"decay_epochs", s.decay_epochs},
                   {"decay_factor", s.decay_factor},
                   {"warmup", s.warmup},
                   {"rampup", s.rampup},
                   {"alpha_kl", s.alpha_kl},
                   {"kl_size", s.kl_size},
                   {"attack", attack_json(s.attack)},
                   {"reg",
                    {{"kind", graddiv::to_string(s.reg.kind)},
                     {"samples", s.reg.samples},
                     {"lambda", s.reg.lambda},
                     {"dpp_jitter", s.reg.dpp_jitter},
                     {"point", graddiv::to_string(s.reg.point)}}},
                   {"probe_count", s.probe_count},
                   {"probe_samples", s.probe_samples}};
  const EvalSpec& e = c.eval;
  Json attacks = Json::array();
  for (const auto& a : e.attacks) attacks.push_back(attack_json(a));
  const eval::ChecklistSettings& k = e.checklist;
  j["eval"] = {{"attacks", attacks},
               {"epsilons", e.epsilons},
               {"seeds", e.seeds},
               {"test_points", e.test_points},
               {"kappa_points", e.kappa_points},
               {"kappa_grads", e.kappa_grads},
               {"transfer_k", e.transfer_k},
               {"transfer_attack", attack_json(e.transfer_attack)},
               {"grid",
                {{"models", e.grid.models},
                 {"resolution", e.grid.resolution},
                 {"extent", e.grid.extent},
                 {"input_id", e.grid.input_id}}},
               {"checklist",
                {{"epsilon", k.epsilon},
                 {"epsilon_grid", k.epsilon_grid},
                 {"iterations", k.iterations},
                 {"eot_samples", k.eot_samples},
                 {"ensemble", k.ensemble},
                 {"blackbox_trials", k.blackbox_trials},
                 {"brute_force_trials", k.brute_force_trials},
                 {"brute_force_points", k.brute_force_points},
                 {"full_box_success", k.full_box_success},
                 {"seed", k.seed}}},
               {"lambda_grid", e.lambda_grid},
               {"validation_size", e.validation_size},
               {"sweep_attack", attack_json(e.sweep_attack)}};
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  root.get("seed", c.seed);
  root.get("out_dir", c.out_dir);
  if (const Json* d = root.find("dataset")) {
    Reader r(*d, "dataset");
    r.get("kind", c.dataset.kind);
    r.get("train_images", c.dataset.train_images);
    r.get("train_labels", c.dataset.train_labels);
    r.get("test_images", c.dataset.test_images);
    r.get("test_labels", c.dataset.test_labels);
    r.get("train_size", c.dataset.train_size);
    r.get("test_size", c.dataset.test_size);
    r.get("downsample", c.dataset.downsample);
    r.get("noise", c.dataset.noise);
    r.finish();
  }
  if (const Json* a = root.find("arch")) {
    Reader r(*a, "arch");
    r.get("hidden", c.arch.hidden);
    r.get("stochastic", c.arch.stochastic);
    r.get("activation", c.arch.activation);
    r.get("slope", c.arch.slope);
    r.get("prior_sigma", c.arch.prior_sigma);
    r.finish();
  }
  train::TrainSchedule& s = c.schedule;
  if (const Json* sj = root.find("schedule")) {
    Reader r(*sj, "schedule");
    r.get("epochs", s.epochs);
    r.get("batch_size", s.batch_size);
    r.get("learning_rate", s.learning_rate);
    r.get("decay_epochs", s.decay_epochs);
    r.get("decay_factor", s.decay_factor);
    r.get("warmup", s.warmup);
    r.get("rampup", s.rampup);
    r.get("alpha_kl", s.alpha_kl);
    r.get("kl_size", s.kl_size);
    if (const Json* a = r.find("attack")) s.attack = read_attack(*a, "schedule.attack");
    if (const Json* g = r.find("reg")) {
      Reader rr(*g, "schedule.reg");
      rr.get_enum("kind", s.reg.kind, graddiv::reg_kind_from_string);
      rr.get("samples", s.reg.samples);
      rr.get("lambda", s.reg.lambda);
      rr.get("dpp_jitter", s.reg.dpp_jitter);
      rr.get_enum("point", s.reg.point, graddiv::reg_point_from_string);
      rr.finish();
    }
    r.get("probe_count", s.probe_count);
    r.get("probe_samples", s.probe_samples);
    r.finish();
  }
  s.seed = c.seed;
  EvalSpec& e = c.eval;
  if (const Json* ej = root.find("eval")) {
    Reader r(*ej, "eval");
    if (const Json* list = r.find("attacks")) {
      if (!list->is_array()) throw ConfigError("eval.attacks: expected an array");
      e.attacks.clear();
      for (std::size_t i = 0; i < list->size(); ++i) {
        e.attacks.push_back(read_attack((*list)[i], "eval.attacks." + std::to_string(i)));
      }
    }
    r.get("epsilons", e.epsilons);
    r.get("seeds", e.seeds);
    r.get("test_points", e.test_points);
    r.get("kappa_points", e.kappa_points);
    r.get("kappa_grads", e.kappa_grads);
    r.get("transfer_k", e.transfer_k);
    if (const Json* a = r.find("transfer_attack")) e.transfer_attack = read_attack(*a, "eval.transfer_attack");
    if (const Json* g = r.find("grid")) {
      Reader rg(*g, "eval.grid");
      rg.get("models", e.grid.models);
      rg.get("resolution", e.grid.resolution);
      rg.get("extent", e.grid.extent);
      rg.get("input_id", e.grid.input_id);
      rg.finish();
    }
    if (const Json* k = r.find("checklist")) {
      Reader rk(*k, "eval.checklist");
      eval::ChecklistSettings& ck = e.checklist;
      rk.get("epsilon", ck.epsilon);
      rk.get("epsilon_grid", ck.epsilon_grid);
      rk.get("iterations", ck.iterations);
      rk.get("eot_samples", ck.eot_samples);
      rk.get("ensemble", ck.ensemble);
      rk.get("blackbox_trials", ck.blackbox_trials);
      rk.get("brute_force_trials", ck.brute_force_trials);
      rk.get("brute_force_points", ck.brute_force_points);
      rk.get("full_box_success", ck.full_box_success);
      rk.get("seed", ck.seed);
      rk.finish();
    }
    r.get("lambda_grid", e.lambda_grid);
    r.get("validation_size", e.validation_size);
    if (const Json* a = r.find("sweep_attack")) e.sweep_attack = read_attack(*a, "eval.sweep_attack");
    r.finish();
  }
  root.finish();
  validate(c);
  return c;
}

std::string serialize(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json* node = &j;
  std::stringstream keys(path);
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (node->is_object()) {
      auto it = node->find(key);
      if (it == node->end()) throw ConfigError("override names an unknown key: " + path);
      node = &*it;
    } else if (node->is_array()) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ConfigError("override index is not a number: " + path);
      }
      if (index >= node->size()) throw ConfigError("override index out of range: " + path);
      node = &(*node)[index];
    } else {
      throw ConfigError("override descends into a scalar: " + path);
    }
  }
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  *node = value;
}

ExperimentConfig load_config(const std::string& path, std::span<const std::string> overrides, bool check_files) {
  Json j;
  if (path.empty()) {
    j = to_json(ExperimentConfig{});
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      j = Json::parse(buf.str());
    } catch (const Json::parse_error& e) {
      throw ConfigError(path + " is not valid JSON: " + e.what());
    }
    // Fill defaults first so overrides can address any documented key.
    ExperimentConfig partial = config_from_json(j);
    j = to_json(partial);
  }
  for (const auto& o : overrides) apply_override(j, o);
  ExperimentConfig c = config_from_json(j);
  if (check_files && c.dataset.kind == "idx") {
    for (const auto* f : {&c.dataset.train_images, &c.dataset.train_labels, &c.dataset.test_images,
                          &c.dataset.test_labels}) {
      if (!std::filesystem::is_regular_file(*f)) throw ConfigError("dataset file not found: " + *f);
    }
  }
  return c;
}

std::string config_hash(const ExperimentConfig& config) {
  const Json full = to_json(config);
  const Json model{{"seed", full["seed"]}, {"dataset", full["dataset"]}, {"arch", full["arch"]},
                   {"schedule", full["schedule"]}};
  return hex16(fnv1a64(model.dump()));
}

Datasets load_datasets(const ExperimentConfig& config) {
  const DatasetSpec& d = config.dataset;
  Datasets out;
  if (d.kind == "two_moons") {
    RngStream rng = RngStream::for_purpose(config.seed, purpose::kData);
    out.train = data::two_moons(d.train_size, d.noise, rng);
    out.test = data::two_moons(d.test_size, d.noise, rng);
    return out;
  }
  out.train = data::load_idx(d.train_images, d.train_labels, d.train_size);
  out.test = data::load_idx(d.test_images, d.test_labels, d.test_size);
  // Both sets share the label space of the training set.
  out.test.num_classes = std::max(out.test.num_classes, out.train.num_classes);
  out.train.num_classes = out.test.num_classes;
  if (d.downsample > 1) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(out.train.dim()))));
    out.train.x = data::downsample(out.train.x, side, d.downsample);
    out.test.x = data::downsample(out.test.x, side, d.downsample);
  }
  return out;
}

net::Architecture make_architecture(const ArchSpec& spec, std::size_t input_dim, std::size_t classes) {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(classes);
  const net::LayerKind act = net::layer_kind_from_string(spec.activation);
  return net::Architecture::mlp(widths, spec.stochastic, act, spec.slope);
}

net::StochasticNet make_net(const ExperimentConfig& config, std::size_t input_dim, std::size_t classes) {
  net::StochasticNet net(make_architecture(config.arch, input_dim, classes), config.arch.prior_sigma);
  RngStream rng = RngStream::for_purpose(config.seed, purpose::kWeights);
  net.initialize(rng);
  return net;
}

}  // namespace gdl::io
