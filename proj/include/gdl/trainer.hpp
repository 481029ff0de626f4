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
#ifndef GDL_TRAINER_HPP_
#define GDL_TRAINER_HPP_

// Adversarial training of stochastic nets: on-the-fly fixed-sample PGD,
// GradDiv regularization under a warm-up / ramp-up schedule, Adam, and step
// learning-rate decay.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdl/attacks.hpp"
#include "gdl/data.hpp"
#include "gdl/graddiv.hpp"
#include "gdl/stochastic_net.hpp"

namespace gdl::train {

/// 0 before warmup, then target * min(1, (epoch - warmup) / rampup); a step
/// to target at warmup when rampup = 0.
double lambda_schedule(std::size_t epoch, std::size_t warmup, std::size_t rampup, double target);

struct TrainSchedule {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  /// Epochs (0-based) from which the rate is multiplied by decay_factor.
  std::vector<std::size_t> decay_epochs{10};
  double decay_factor = 0.1;
  std::size_t warmup = 1;
  std::size_t rampup = 7;
  double alpha_kl = 0.02;
  /// |D| in the KL normalizer alpha_kl * KL / |D|; 0 uses the training-set
  /// size.
  std::size_t kl_size = 0;
  /// Training attack; family is always fixed-sample pgd. epsilon 0 trains on
  /// clean inputs.
  attacks::AttackSpec attack{attacks::Family::kPgd, attacks::Norm::kLinf, 0.3, 0.075, 10};
  graddiv::RegularizerSpec reg;  // reg.lambda is the target weight
  std::uint64_t seed = 0;
  std::size_t probe_count = 32;
  std::size_t probe_samples = 16;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
  double lambda_at(std::size_t epoch) const;
  bool is_decay_epoch(std::size_t epoch) const;
  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;          // mean total objective over batches
  double accuracy = 0.0;      // clean train accuracy of one fresh sample model
  double rho = 0.0;           // probe means
  double kappa_over_p = 0.0;
  double r_mean = 0.0;
  double r_dpp = 0.0;
  double lambda = 0.0;
  double learning_rate = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

using TrainLog = std::vector<EpochLog>;

struct Snapshot {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double lambda = 0.0;
  double learning_rate = 0.0;
  double likelihood = 0.0;
  double kl = 0.0;
  double reg = 0.0;
};

/// Raised when the objective or its gradient becomes non-finite.
class TrainingAborted : public std::runtime_error {
 public:
  explicit TrainingAborted(const Snapshot& s);
  const Snapshot& snapshot() const { return snapshot_; }

 private:
  Snapshot snapshot_;
};

class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::vector<net::Parameter>& params, std::span<const Tensor> grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Concentration measures over probe inputs with n gradient samples each:
/// means of rho_hat, kappa_hat / p, R_mean and R_DPP (on min(n, p) samples).
struct Concentration {
  double rho = 0.0;
  double kappa_over_p = 0.0;
  double r_mean = 0.0;
  double r_dpp = 0.0;
};
Concentration measure_concentration(const net::StochasticNet& net, const data::Dataset& probes,
                                    std::size_t n, double dpp_jitter, RngStream& rng);

struct Callbacks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called at the end of the last epoch before each decay and after the
  /// final epoch.
  std::function<void(const net::StochasticNet&, std::size_t epoch)> on_checkpoint;
};

/// Trains `net` in place. Streams derive from schedule.seed.
TrainLog train(net::StochasticNet& net, const data::Dataset& dataset, const TrainSchedule& schedule,
               const Callbacks& callbacks = {});

struct LambdaPoint {
  double lambda = 0.0;
  double robust_accuracy = 0.0;
};

struct LambdaSweep {
  std::vector<LambdaPoint> points;
  double best = 0.0;
};

/// Trains one net per lambda (fresh from `make_net`) and keeps the lambda
/// with the highest validation robust accuracy under `eval_attack`. Ties go
/// to the earlier grid entry.
LambdaSweep validate_lambda(const std::function<net::StochasticNet()>& make_net,
                            const data::Dataset& train_set, const data::Dataset& validation,
                            TrainSchedule schedule, std::span<const double> grid,
                            const attacks::AttackSpec& eval_attack);

}  // namespace gdl::train

#endif  // GDL_TRAINER_HPP_
