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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "gdl/checkpoint.hpp"
#include "gdl/config.hpp"
#include "gdl/diagnostics.hpp"
#include "gdl/report.hpp"

using namespace gdl;
using namespace gdl::io;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

net::StochasticNet small_net(bool stochastic) {
  net::StochasticNet n(net::Architecture::mlp({3, 4, 2}, stochastic), 0.05);
  RngStream rng(11);
  n.initialize(rng);
  return n;
}

ExperimentConfig moons_config() {
  ExperimentConfig c;
  c.dataset.kind = "two_moons";
  c.dataset.train_size = 40;
  c.dataset.test_size = 20;
  return c;
}

}  // namespace

TEST_CASE("base64 of a single 1.0 is its little-endian bytes") {
  const std::vector<double> one{1.0};
  CHECK(encode_doubles(one) == "AAAAAAAA8D8=");
  const auto bytes = base64_decode("AAAAAAAA8D8=");
  CHECK(bytes == std::vector<unsigned char>{0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F});
  CHECK(decode_doubles("AAAAAAAA8D8=") == one);
}

TEST_CASE("base64 padding and rejection") {
  const std::vector<unsigned char> m{'M', 'a', 'n'};
  CHECK(base64_encode(m) == "TWFu");
  CHECK(base64_encode(std::vector<unsigned char>{'M', 'a'}) == "TWE=");
  CHECK(base64_encode(std::vector<unsigned char>{'M'}) == "TQ==");
  CHECK(base64_encode(std::vector<unsigned char>{}).empty());
  CHECK(base64_decode("TWE=") == std::vector<unsigned char>{'M', 'a'});
  CHECK(base64_decode("TQ==") == std::vector<unsigned char>{'M'});
  CHECK_THROWS_AS(base64_decode("TWF"), CheckpointError);
  CHECK_THROWS_AS(base64_decode("TW!u"), CheckpointError);
  CHECK_THROWS_AS(base64_decode("T=Fu"), CheckpointError);
  CHECK_THROWS_AS(base64_decode("TQ==TWFu"), CheckpointError);
  CHECK_THROWS_AS(decode_doubles("TWFu"), CheckpointError);

  const std::vector<double> odd{-0.0, std::numeric_limits<double>::denorm_min(), 1e308, -3.25,
                                std::numeric_limits<double>::infinity()};
  const auto back = decode_doubles(encode_doubles(odd));
  REQUIRE(back.size() == odd.size());
  for (std::size_t i = 0; i < odd.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(back[i]) == std::bit_cast<std::uint64_t>(odd[i]));
  }
}

TEST_CASE("checkpoint save, load, save is byte-identical") {
  for (bool stochastic : {true, false}) {
    const net::StochasticNet n = small_net(stochastic);
    const CheckpointMeta meta{7, 42, "0123456789abcdef"};
    const std::string a = temp_path("gdl_ck_a.json");
    const std::string b = temp_path("gdl_ck_b.json");
    save_checkpoint(n, meta, a);
    const Checkpoint ck = load_checkpoint(a);
    CHECK(ck.meta == meta);
    CHECK(ck.net.architecture() == n.architecture());
    CHECK(ck.net.prior_sigma() == n.prior_sigma());
    REQUIRE(ck.net.parameters().size() == n.parameters().size());
    for (std::size_t i = 0; i < n.parameters().size(); ++i) {
      CHECK(ck.net.parameters()[i].name == n.parameters()[i].name);
      CHECK(ck.net.parameters()[i].value == n.parameters()[i].value);
    }
    save_checkpoint(ck.net, ck.meta, b);
    CHECK(read_all(a) == read_all(b));
    std::filesystem::remove(a);
    std::filesystem::remove(b);
  }
}

TEST_CASE("checkpoint errors") {
  const net::StochasticNet n = small_net(true);
  const std::string good = checkpoint_to_string(n, {1, 2, "h"});
  auto tampered = [&](auto edit) {
    auto j = Json::parse(good);
    edit(j);
    return j.dump();
  };
  CHECK_THROWS_WITH_AS(checkpoint_from_string(tampered([](Json& j) { j["version"] = 2; })),
                       doctest::Contains("version 2"), CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([](Json& j) { j.erase("version"); })), CheckpointError);
  const std::string first = n.parameters()[0].name;
  CHECK_THROWS_WITH_AS(checkpoint_from_string(tampered([&](Json& j) { j["params"][first]["shape"] = {9, 9}; })),
                       doctest::Contains("shape"), CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([&](Json& j) { j["params"][first]["data_b64"] = "AA*A"; })),
                  CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([&](Json& j) { j["params"][first]["data_b64"] = "AAAAAAAA8D8="; })),
                  CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([&](Json& j) { j["params"].erase(first); })), CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([](Json& j) { j["arch"]["layers"][0]["out"] = 5; })),
                  CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string(tampered([](Json& j) { j["arch"]["layers"][1]["kind"] = "tanh"; })),
                  CheckpointError);
  CHECK_THROWS_AS(checkpoint_from_string("{not json"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.json"), CheckpointError);
}

TEST_CASE("tampered config hash is a captured warning") {
  const net::StochasticNet n = small_net(true);
  const std::string text = checkpoint_to_string(n, {3, 1, "aaaa"});
  set_quiet_warnings(true);
  {
    WarningCapture capture;
    checkpoint_from_string(text, std::string("aaaa"));
    CHECK(capture.messages().empty());
    checkpoint_from_string(text, std::string("bbbb"));
    REQUIRE(capture.messages().size() == 1);
    CHECK(capture.messages()[0].find("aaaa") != std::string::npos);
    CHECK(capture.messages()[0].find("bbbb") != std::string::npos);
  }
  set_quiet_warnings(false);
}

TEST_CASE("config round-trip") {
  ExperimentConfig c;
  CHECK(parse_config(serialize(c)) == c);

  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  c.schedule.seed = c.seed;
  c.schedule.learning_rate = 0.1 + 0.2;
  c.schedule.reg.kind = graddiv::RegKind::kSmoothmax;
  c.schedule.reg.point = graddiv::RegPoint::kClean;
  c.schedule.attack.norm = attacks::Norm::kL2;
  c.eval.attacks.push_back({attacks::Family::kRotatedPgd, attacks::Norm::kL2, 1.0, 0.25, 5});
  c.eval.attacks.back().rotation_deg = 30.0;
  c.eval.checklist.epsilon_grid = {0.05, 1.0 / 3.0};
  c.arch.hidden = {7};
  c.arch.activation = "leaky_relu";
  c.arch.slope = 0.01;
  c.dataset = moons_config().dataset;
  const std::string text = serialize(c);
  CHECK(parse_config(text) == c);
  CHECK(serialize(parse_config(text)) == text);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("config rejects unknown keys, bad types and invalid values") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"sed": 1})"), doctest::Contains("sed"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"schedule": {"epoch": 1}})"), doctest::Contains("schedule.epoch"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schedule": {"epochs": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schedule": {"epochs": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"arch": {"prior_sigma": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"arch": {"prior_sigma": -0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schedule": {"reg": {"kind": "cosine"}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schedule": {"reg": {"kind": "dpp", "samples": 1}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"eval": {"attacks": [{"family": "pgd", "epsilon": 0.1, "step": 0.5}]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset": {"kind": "cifar"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset": {"downsample": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  // Missing keys keep their defaults.
  CHECK(parse_config("{}") == ExperimentConfig{});
  CHECK(parse_config(R"({"seed": 9})").schedule.seed == 9);
}

TEST_CASE("dotted overrides") {
  Json j = to_json(ExperimentConfig{});
  apply_override(j, "schedule.epochs=30");
  apply_override(j, "schedule.reg.kind=mean");
  apply_override(j, "eval.attacks.1.eot_samples=4");
  apply_override(j, "eval.epsilons=[0.5]");
  apply_override(j, "out_dir=some/where");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.schedule.epochs == 30);
  CHECK(c.schedule.reg.kind == graddiv::RegKind::kMean);
  CHECK(c.eval.attacks[1].eot_samples == 4);
  CHECK(c.eval.epsilons == std::vector<double>{0.5});
  CHECK(c.out_dir == "some/where");

  CHECK_THROWS_AS(apply_override(j, "schedule.epochz=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "schedule.epochs"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "eval.attacks.9.epsilon=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "eval.attacks.x.epsilon=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "seed.x=1"), ConfigError);
}

TEST_CASE("load_config reads files, applies overrides and checks data files") {
  const std::string path = temp_path("gdl_cfg.json");
  write_text(path, R"({"seed": 4, "dataset": {"kind": "two_moons", "train_size": 40, "test_size": 20}})");
  const std::vector<std::string> overrides{"seed=5", "schedule.epochs=2", "schedule.warmup=0",
                                          "schedule.rampup=1", "schedule.decay_epochs=[]"};
  const ExperimentConfig c = load_config(path, overrides);
  CHECK(c.seed == 5);
  CHECK(c.schedule.seed == 5);
  CHECK(c.schedule.epochs == 2);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);

  write_text(path, R"({"dataset": {"train_images": "/nonexistent/images"}})");
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("/nonexistent/images"), ConfigError);
  CHECK_NOTHROW(load_config(path, {}, false));
  std::filesystem::remove(path);
}

TEST_CASE("config hash tracks content") {
  ExperimentConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.eval.seeds += 1;
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.schedule.epochs += 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("two_moons datasets and nets come from the master seed") {
  const ExperimentConfig c = moons_config();
  const Datasets d1 = load_datasets(c);
  const Datasets d2 = load_datasets(c);
  CHECK(d1.train.size() == 40);
  CHECK(d1.test.size() == 20);
  CHECK(d1.train.x == d2.train.x);
  const net::StochasticNet n1 = make_net(c, 2, 2);
  const net::StochasticNet n2 = make_net(c, 2, 2);
  CHECK(n1.architecture() == make_architecture(c.arch, 2, 2));
  for (std::size_t i = 0; i < n1.parameters().size(); ++i) {
    CHECK(n1.parameters()[i].value == n2.parameters()[i].value);
  }
  ExperimentConfig other = c;
  other.seed = 2;
  CHECK_FALSE(load_datasets(other).train.x == d1.train.x);
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.1 + 0.2) == "0.30000000000000004");
  CHECK(format_number(-2.5e-10) == "-2.5e-10");
  for (double v : {1.0 / 3.0, 6.02214076e23, 5e-324}) CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
}

TEST_CASE("csv schemas") {
  const std::vector<eval::RobustnessRow> rows{{"eot_pgd", "eot", "linf", 0.3, 2, 0.5}};
  CHECK(robustness_csv(rows) == "attack,mode,norm,epsilon,seed,accuracy\neot_pgd,eot,linf,0.3,2,0.5\n");
  const std::vector<eval::KappaRow> kappa{{3, 12.5, 0.25}};
  CHECK(kappa_csv(kappa) == "input_id,kappa_hat,rho_hat\n3,12.5,0.25\n");
  Tensor m(Shape{2, 2});
  m.at(0, 1) = 0.75;
  CHECK(transfer_csv(m) == "source,target,accuracy\n0,0,0\n0,1,0.75\n1,0,0\n1,1,0\n");
  train::TrainLog log(1);
  log[0] = {4, 1.5, 0.9, 0.5, 0.25, 0.125, 2.0, 1.0, 0.001};
  CHECK(trainlog_csv(log) == "epoch,loss,acc,rho,kappa_over_p,rmean,rdpp,lambda,lr\n4,1.5,0.9,0.5,0.25,0.125,2,1,0.001\n");
  eval::DecisionGrid g;
  g.a = {-1, -1, 1, 1};
  g.b = {-1, 1, -1, 1};
  g.labels = {{0, 1, 1, 0}};
  CHECK(grid_csv(g, 0) == "a,b,label\n-1,-1,0\n-1,1,1\n1,-1,1\n1,1,0\n");
  CHECK_THROWS(grid_csv(g, 1));
  train::LambdaSweep sweep{{{0.1, 0.5}, {1.0, 0.6}}, 1.0};
  CHECK(lambda_csv(sweep) == "lambda,robust_accuracy\n0.1,0.5\n1,0.6\n");
  eval::ChecklistReport report{{{"item, one", true, "say \"hi\""}}};
  CHECK(checklist_csv(report) == "item,pass,evidence\n\"item, one\",1,\"say \"\"hi\"\"\"\n");
}

TEST_CASE("manifest lists outputs and warnings") {
  Manifest m{"train", "abc", 3, {"trainlog.csv"}, {"w1"}};
  const Json j = Json::parse(manifest_to_string(m));
  CHECK(j["command"] == "train");
  CHECK(j["seed"] == 3);
  CHECK(j["warnings"][0] == "w1");
  CHECK(j["outputs"][0] == "trainlog.csv");
}
