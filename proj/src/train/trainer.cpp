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
#include "gdl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdl::train {

double lambda_schedule(std::size_t epoch, std::size_t warmup, std::size_t rampup, double target) {
  if (epoch < warmup) return 0.0;
  if (rampup == 0) return target;
  const double t = static_cast<double>(epoch - warmup) / static_cast<double>(rampup);
  return target * std::min(1.0, t);
}

void TrainSchedule::validate() const {
  if (epochs == 0) throw std::invalid_argument("schedule: epochs must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("schedule: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("schedule: learning_rate must be > 0");
  if (warmup + rampup > epochs) {
    throw std::invalid_argument("schedule: warmup + rampup (" + std::to_string(warmup + rampup) +
                                ") exceeds epochs (" + std::to_string(epochs) + ")");
  }
  if (!(alpha_kl >= 0.0)) throw std::invalid_argument("schedule: alpha_kl must be >= 0");
  if (!(decay_factor > 0.0)) throw std::invalid_argument("schedule: decay_factor must be > 0");
  if (attack.family != attacks::Family::kPgd) {
    throw std::invalid_argument("schedule: training attack must be fixed-sample pgd");
  }
  if (probe_samples < 2) throw std::invalid_argument("schedule: probe_samples must be >= 2");
  attack.validate();
  reg.validate();
}

double TrainSchedule::learning_rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (std::size_t d : decay_epochs)
    if (epoch >= d) lr *= decay_factor;
  return lr;
}

double TrainSchedule::lambda_at(std::size_t epoch) const {
  return lambda_schedule(epoch, warmup, rampup, reg.lambda);
}

bool TrainSchedule::is_decay_epoch(std::size_t epoch) const {
  return std::find(decay_epochs.begin(), decay_epochs.end(), epoch + 1) != decay_epochs.end();
}

TrainingAborted::TrainingAborted(const Snapshot& s)
    : std::runtime_error("non-finite objective at epoch " + std::to_string(s.epoch) + ", batch " +
                         std::to_string(s.batch) + " (lambda " + std::to_string(s.lambda) + ", lr " +
                         std::to_string(s.learning_rate) + ", likelihood " + std::to_string(s.likelihood) +
                         ", kl " + std::to_string(s.kl) + ", reg " + std::to_string(s.reg) + ")"),
      snapshot_(s) {}

void Adam::step(std::vector<net::Parameter>& params, std::span<const Tensor> grads, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = params[k].value;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

Concentration measure_concentration(const net::StochasticNet& net, const data::Dataset& probes,
                                    std::size_t n, double dpp_jitter, RngStream& rng) {
  std::vector<ad::Var> grads;
  for (std::size_t k = 0; k < n; ++k) {
    RngStream stream = rng.fork();
    grads.emplace_back(net::sample_model(net, stream).loss_and_input_gradient(probes.x, probes.y).gradients);
  }
  const graddiv::UnitGradients u = graddiv::normalize_gradients(grads);
  Concentration c;
  c.rho = graddiv::batch_mean(graddiv::row_mrl(u), u).item();
  c.kappa_over_p = graddiv::batch_mean(graddiv::row_kappa_over_p(u), u).item();
  c.r_mean = graddiv::batch_mean(graddiv::row_mean_cosine(u), u).item();
  const std::size_t m = std::min(n, probes.dim());
  const graddiv::UnitGradients head =
      graddiv::normalize_gradients(std::span<const ad::Var>(grads.data(), m));
  c.r_dpp = graddiv::batch_mean(graddiv::row_dpp(head, dpp_jitter), head).item();
  return c;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

double sample_accuracy(const net::StochasticNet& net, const data::Dataset& d, RngStream& rng) {
  RngStream stream = rng.fork();
  const auto predicted = net::argmax_rows(net::sample_model(net, stream).probabilities(d.x));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += predicted[i] == d.y[i];
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

}  // namespace

TrainLog train(net::StochasticNet& net, const data::Dataset& dataset, const TrainSchedule& schedule,
               const Callbacks& callbacks) {
  schedule.validate();
  if (dataset.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (dataset.dim() != net.architecture().input_dim()) {
    throw ShapeError("train", dataset.x.shape(), Shape{dataset.size(), net.architecture().input_dim()});
  }
  RngStream data_rng = RngStream::for_purpose(schedule.seed, purpose::kData);
  RngStream attack_rng = RngStream::for_purpose(schedule.seed, purpose::kTrainAttack);
  RngStream reg_rng = RngStream::for_purpose(schedule.seed, purpose::kRegSamples);
  RngStream probe_rng = RngStream::for_purpose(schedule.seed, purpose::kRegSamples, 1);
  RngStream eval_rng = RngStream::for_purpose(schedule.seed, purpose::kEvalAttack, 1);
  const data::Dataset probes = dataset.slice(0, schedule.probe_count);
  const std::size_t kl_size = schedule.kl_size > 0 ? schedule.kl_size : dataset.size();

  Adam adam;
  TrainLog log;
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.learning_rate_at(epoch);
    const double lambda = schedule.lambda_at(epoch);
    const auto order = permutation(dataset.size(), data_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < dataset.size(); begin += schedule.batch_size) {
      const std::size_t end = std::min(begin + schedule.batch_size, dataset.size());
      const data::Dataset batch =
          dataset.select(std::span<const std::size_t>(order.data() + begin, end - begin));
      Tensor x_adv = batch.x;
      if (schedule.attack.epsilon > 0.0) {
        const attacks::GradientSource source = attacks::fixed_source(net, attack_rng);
        x_adv = attacks::pgd(source, batch.x, batch.y, schedule.attack, attack_rng).adversarial;
      }
      ad::Tape tape;
      net::BoundNet bound(net, tape);
      const graddiv::Objective obj =
          graddiv::total_objective(bound, x_adv, batch.x, batch.y, schedule.reg, lambda,
                                   schedule.alpha_kl, kl_size, reg_rng);
      const double total = obj.total.item();
      const Snapshot snap{epoch, batches, lambda, lr, obj.likelihood, obj.kl, obj.reg};
      if (!std::isfinite(total)) throw TrainingAborted(snap);
      const auto grads = ad::grad(obj.total, bound.params());
      std::vector<Tensor> values;
      values.reserve(grads.size());
      for (const ad::Var& g : grads) {
        if (!g.value().all_finite()) throw TrainingAborted(snap);
        values.push_back(g.value());
      }
      adam.step(net.parameters(), values, lr);
      net.clamp_logsigma();
      loss_sum += total;
      ++batches;
    }
    EpochLog row;
    row.epoch = epoch;
    row.loss = loss_sum / static_cast<double>(batches);
    row.accuracy = sample_accuracy(net, dataset, eval_rng);
    const Concentration c =
        measure_concentration(net, probes, schedule.probe_samples, schedule.reg.dpp_jitter, probe_rng);
    row.rho = c.rho;
    row.kappa_over_p = c.kappa_over_p;
    row.r_mean = c.r_mean;
    row.r_dpp = c.r_dpp;
    row.lambda = lambda;
    row.learning_rate = lr;
    log.push_back(row);
    if (callbacks.on_epoch) callbacks.on_epoch(row);
    const bool last = epoch + 1 == schedule.epochs;
    if (callbacks.on_checkpoint && (last || schedule.is_decay_epoch(epoch))) {
      callbacks.on_checkpoint(net, epoch);
    }
  }
  return log;
}

LambdaSweep validate_lambda(const std::function<net::StochasticNet()>& make_net,
                            const data::Dataset& train_set, const data::Dataset& validation,
                            TrainSchedule schedule, std::span<const double> grid,
                            const attacks::AttackSpec& eval_attack) {
  if (grid.empty()) throw std::invalid_argument("validate_lambda: empty grid");
  LambdaSweep sweep;
  double best_acc = -1.0;
  for (double lambda : grid) {
    schedule.reg.lambda = lambda;
    net::StochasticNet net = make_net();
    train(net, train_set, schedule);
    RngStream rng = RngStream::for_purpose(schedule.seed, purpose::kEvalAttack);
    const attacks::AttackResult r = attacks::run_attack(net, validation.x, validation.y, eval_attack, rng);
    const double acc = 1.0 - r.success_rate();
    sweep.points.push_back({lambda, acc});
    if (acc > best_acc) {
      best_acc = acc;
      sweep.best = lambda;
    }
  }
  return sweep;
}

}  // namespace gdl::train
